"""Column-oriented record of sampled observables."""

import csv

import numpy as np


class Trace:
    def __init__(self, columns):
        self.columns = list(columns)
        self._rows = []

    def append(self, row):
        self._rows.append([float(row[c]) for c in self.columns])

    def __len__(self):
        return len(self._rows)

    def __getitem__(self, name):
        j = self.columns.index(name)
        return np.array([r[j] for r in self._rows])

    def as_array(self):
        return np.array(self._rows, dtype=float).reshape(len(self._rows), len(self.columns))

    def write_csv(self, path, fmt="%.12e"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self._rows:
                w.writerow([fmt % v for v in r])
