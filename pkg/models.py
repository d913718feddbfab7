from sqlalchemy import Column, Integer, String, DateTime
from database import Base
from datetime import datetime, timezone


def utcnow():
    return datetime.now(timezone.utc).replace(tzinfo=None)


class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    experiment = Column(String(50), nullable=False, index=True)
    seed = Column(String(20), nullable=False)  # text: seeds go up to 2**64 - 1
    config_hash = Column(String(64), nullable=False)  # sha256 of the canonical config echo
    version = Column(String(20), nullable=False)
    status = Column(String(20), default="running")  # running, completed, failed
    exit_code = Column(Integer, nullable=True)
    started_at = Column(DateTime, default=utcnow)
    finished_at = Column(DateTime, nullable=True)
    output_dir = Column(String(500), nullable=False)

    def as_row(self) -> dict:
        return {
            "id": self.id,
            "experiment": self.experiment,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "version": self.version,
            "status": self.status,
            "exit_code": self.exit_code,
            "started_at": self.started_at.isoformat() if self.started_at else None,
            "finished_at": self.finished_at.isoformat() if self.finished_at else None,
            "output_dir": self.output_dir,
        }
