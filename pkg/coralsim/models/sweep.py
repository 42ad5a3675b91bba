from coralsim import db
from coralsim.models.base import BaseModel


class SweepRecord(BaseModel):
    __tablename__ = 'sweeps'

    variable = db.Column(db.String(20), nullable=False, index=True)  # 'epsilon', 'alpha'
    values = db.Column(db.JSON, nullable=False)
    status = db.Column(db.String(20), nullable=False, default='running')
    table = db.Column(db.JSON)
    output_dir = db.Column(db.String(255))

    def finish(self, rows, status='completed'):
        self.table = rows
        self.status = status
        self.save()

    def to_dict(self):
        return {
            'id': self.id,
            'variable': self.variable,
            'values': self.values,
            'status': self.status,
            'table': self.table,
            'output_dir': self.output_dir,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
