"""Pass/fail report shared by the sector check and the hypothesis validator."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    ok: bool
    value: object = None
    limit: object = None
    detail: str = ""


@dataclass
class ValidationReport:
    title: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name, ok, value=None, limit=None, detail=""):
        self.checks.append(Check(name, bool(ok), value, limit, detail))
        return self.checks[-1]

    def extend(self, other: "ValidationReport", prefix=""):
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.ok, c.value, c.limit, c.detail))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "title": self.title,
            "ok": self.ok,
            "checks": [
                {"name": c.name, "ok": c.ok, "value": _plain(c.value),
                 "limit": _plain(c.limit), "detail": c.detail}
                for c in self.checks
            ],
        }

    def format_table(self) -> str:
        rows = [(c.name, "ok" if c.ok else "FAIL", _fmt(c.value), _fmt(c.limit), c.detail)
                for c in self.checks]
        header = ("check", "status", "value", "limit", "detail")
        widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(4)]
        lines = [self.title]
        lines.append("  ".join(h.ljust(w) for h, w in zip(header[:4], widths)) + "  " + header[4])
        for r in rows:
            lines.append("  ".join(str(v).ljust(w) for v, w in zip(r[:4], widths)) + "  " + r[4])
        lines.append(f"overall: {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(lines)


def _plain(v):
    if hasattr(v, "tolist"):
        return v.tolist()
    return v


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)
