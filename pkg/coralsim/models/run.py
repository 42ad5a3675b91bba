from coralsim import db
from coralsim.models.base import BaseModel


class RunRecord(BaseModel):
    __tablename__ = 'runs'

    name = db.Column(db.String(100), nullable=False)
    config_text = db.Column(db.Text, nullable=False)
    seed = db.Column(db.Integer, default=0)
    status = db.Column(db.String(20), nullable=False, default='running', index=True)  # 'running', 'completed', 'failed'
    steps = db.Column(db.Integer, default=0)
    final_time = db.Column(db.Float, default=0.0)
    output_dir = db.Column(db.String(255))
    error_msg = db.Column(db.Text)
    summary = db.Column(db.JSON)

    __table_args__ = (
        db.Index('idx_run_name', 'name'),
    )

    def complete(self, steps, final_time, summary):
        self.status = 'completed'
        self.steps = steps
        self.final_time = final_time
        self.summary = summary
        self.save()

    def fail(self, error):
        self.status = 'failed'
        self.error_msg = str(error)
        self.save()

    def to_dict(self):
        return {
            'id': self.id,
            'name': self.name,
            'seed': self.seed,
            'status': self.status,
            'steps': self.steps,
            'final_time': self.final_time,
            'output_dir': self.output_dir,
            'error_msg': self.error_msg,
            'summary': self.summary,
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'updated_at': self.updated_at.isoformat() if self.updated_at else None,
        }
