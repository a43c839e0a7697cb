"""
Chaining (weight) functions for threshold-weighted kernel scores.

A weight w(x) enters the wCRPS kernel through its antiderivative
W(x) = integral of w from -inf to x, and the kernel is |W(x) - W(x')|.

Supported kinds:
    unweighted          w = 1,               W(x) = x
    quantile(q)         w = 1{x >= q},       W(x) = max(x - q, 0)
    affine(a, b, u)     w = a + b 1{x >= u}, W(x) = a x + b max(x - u, 0)

Every W here is nondecreasing, so |W(x) - W(x')| of an affine weight splits
into a |x - x'| + b |W_u(x) - W_u(x')|.
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class WeightSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["unweighted", "quantile", "affine"] = "unweighted"
    q: float | None = None
    a: float = Field(default=1.0, ge=0.0)
    b: float = Field(default=0.0, ge=0.0)
    u: float | None = None

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "WeightSpec":
        if self.kind == "quantile" and self.q is None:
            raise ValueError("quantile weight needs a threshold q")
        if self.kind == "affine":
            if self.b > 0 and self.u is None:
                raise ValueError("affine weight with b > 0 needs a threshold u")
            if self.a == 0 and self.b == 0:
                raise ValueError("affine weight with a = b = 0 vanishes everywhere")
        return self

    # --- constructors -----------------------------------------------------
    @classmethod
    def unweighted(cls) -> "WeightSpec":
        return cls(kind="unweighted")

    @classmethod
    def quantile(cls, q: float) -> "WeightSpec":
        return cls(kind="quantile", q=float(q))

    @classmethod
    def affine(cls, a: float, b: float, u: float) -> "WeightSpec":
        return cls(kind="affine", a=float(a), b=float(b), u=float(u))

    @classmethod
    def indicator_plus_one(cls, u: float) -> "WeightSpec":
        """w(x) = 1 + 1{x >= u}."""
        return cls.affine(1.0, 1.0, u)

    @classmethod
    def indicator_plus_level(cls, u: float) -> "WeightSpec":
        """w(x) = 1 + u 1{x >= u}; requires u >= 0."""
        return cls.affine(1.0, u, u)

    # --- evaluation -------------------------------------------------------
    @property
    def threshold(self) -> float:
        """Point where the weight switches on; -inf when there is none."""
        if self.kind == "quantile":
            return float(self.q)
        if self.kind == "affine" and self.b > 0:
            return float(self.u)
        return -math.inf

    def density(self, x):
        """w(x)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "unweighted":
            return np.ones_like(x)
        if self.kind == "quantile":
            return (x >= self.q).astype(float)
        step = (x >= self.u).astype(float) if self.b > 0 else 0.0
        return self.a + self.b * step

    def chain(self, x):
        """W(x), the chaining function."""
        x = np.asarray(x, dtype=float)
        if self.kind == "unweighted":
            return x.copy()
        if self.kind == "quantile":
            return np.maximum(x - self.q, 0.0)
        out = self.a * x if self.a > 0 else np.zeros_like(x)
        if self.b > 0:
            out = out + self.b * np.maximum(x - self.u, 0.0)
        return out

    def components(self) -> list[tuple[float, "WeightSpec"]]:
        """Split into (coefficient, elementary weight) pairs."""
        if self.kind != "affine":
            return [(1.0, self)]
        parts: list[tuple[float, WeightSpec]] = []
        if self.a > 0:
            parts.append((self.a, WeightSpec.unweighted()))
        if self.b > 0:
            parts.append((self.b, WeightSpec.quantile(self.u)))
        return parts
