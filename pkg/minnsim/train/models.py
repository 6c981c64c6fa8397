import csv
import os
from dataclasses import dataclass, field

METRIC_COLUMNS = ("epoch", "loss", "accuracy", "tx_power", "snr_db", "seed")


@dataclass
class Metrics:
    """Per-epoch rows; extra keys (sweep parameters, stage tags) follow the fixed columns."""

    rows: list = field(default_factory=list)

    def add(self, epoch, loss, accuracy, tx_power, snr_db, seed, **extra):
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {accuracy}")
        if tx_power < 0:
            raise ValueError(f"tx_power must be non-negative, got {tx_power}")
        row = dict(epoch=epoch, loss=loss, accuracy=accuracy, tx_power=tx_power, snr_db=snr_db, seed=seed)
        row.update(extra)
        self.rows.append(row)
        return row

    def extend(self, other, **extra):
        for row in other.rows:
            self.rows.append({**row, **extra})

    def column(self, name):
        return [row[name] for row in self.rows]

    @property
    def loss(self):
        return self.column("loss")

    @property
    def accuracy(self):
        return self.column("accuracy")

    @property
    def tx_power(self):
        return self.column("tx_power")

    def columns(self):
        names = list(METRIC_COLUMNS)
        for row in self.rows:
            names.extend(k for k in row if k not in names)
        return names

    def append_csv(self, path):
        """Append rows to `path`, writing the header only when the file is new."""
        names = self.columns()
        new_file = not os.path.exists(path) or os.path.getsize(path) == 0
        with open(path, "a", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=names, extrasaction="ignore", lineterminator="\n")
            if new_file:
                writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _fmt(row.get(k, "")) for k in names})


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value
