#!/usr/bin/env python3
# Copyright 2026 The dpfed Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Independent reference values frozen into tests/oracle_values.h.

Closed forms are evaluated with mpmath at 50 digits. Suite statistics come
from a pure-Python port of the counter-based stream and dense numpy linear
algebra (no conjugate gradient, no factored operators).
"""

import math

import mpmath
import numpy as np

mpmath.mp.dps = 50
MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def hash_tag(tag):
    h = 0xCBF29CE484222325
    for c in tag.encode():
        h ^= c
        h = (h * 0x100000001B3) & MASK
    return h


def digest(seed, labels):
    h = mix64((seed + GOLDEN) & MASK)
    for tag, index in labels:
        h = mix64(h ^ hash_tag(tag))
        h = mix64((h + GOLDEN * (index + 1)) & MASK)
    return h


class Stream:
    def __init__(self, seed, labels=()):
        self.state = digest(seed, labels)
        self.cached = None

    def u64(self):
        self.state = (self.state + GOLDEN) & MASK
        return mix64(self.state)

    def uniform(self):
        return (self.u64() >> 11) * 2.0**-53

    def uniform_positive(self):
        return ((self.u64() >> 11) + 1) * 2.0**-53

    def gaussian(self):
        if self.cached is not None:
            g, self.cached = self.cached, None
            return g
        u1 = self.uniform_positive()
        u2 = self.uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self.cached = radius * math.sin(angle)
        return radius * math.cos(angle)


def quadratic_suite(seed, n, d, rank, std):
    optima, factors = [], []
    for i in range(n):
        s = Stream(seed, [("client", i)])
        optima.append(np.array([s.gaussian() for _ in range(d)]))
        a = np.empty((d, rank))
        for col in range(rank):
            for row in range(d):
                a[row, col] = std * s.gaussian()
        factors.append(a)
    return optima, factors


def power_iteration(q, iters=5000):
    v = np.ones(q.shape[0]) / math.sqrt(q.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = q @ v
        lam_next = float(v @ w)
        v = w / np.linalg.norm(w)
        if abs(lam_next - lam) <= 1e-15 * lam_next:
            break
        lam = lam_next
    return lam_next


def main():
    rho = mpmath.sqrt(1 * 200 * mpmath.log(1 / mpmath.mpf("1e-6"))) / (1000 * 5)
    sigma2 = (1 * 500 * mpmath.mpf(1000) ** 2 * mpmath.log(1 / mpmath.mpf("1e-6"))
              / (mpmath.mpf(100) ** 2 * 5**2))
    x, m = mpmath.mpf("0.1"), 2
    geo_lhs = (1 - (1 - x) ** m) / x
    geo_rhs = m * (1 - 11 * (m - 1) * x / 24)
    print(f"rho_n1000 = {mpmath.nstr(rho, 20)}")
    print(f"sigma2 = {mpmath.nstr(sigma2, 20)}")
    print(f"geometric sum lhs = {mpmath.nstr(geo_lhs, 20)} rhs = {mpmath.nstr(geo_rhs, 20)}")

    # Scalar lemma example: f = w^2 / 2, eta = 1/4, E = 4, w_k = 1, L = 1.
    eta, L = mpmath.mpf(1) / 4, 1
    w = [mpmath.mpf(1)]
    for _ in range(4):
        w.append(w[-1] - eta * w[-1])
    grads = w
    f1_lhs = w[4] ** 2
    f1_rhs = w[0] ** 2 - eta / (2 * L) * sum(g**2 for g in grads[:4])
    u2 = ((w[0] - w[4]) / eta) ** 2
    f2_rhs = 2 * L * 16 * (w[0] ** 2 / 2)
    print(f"scalar distance lhs = {mpmath.nstr(f1_lhs, 20)} rhs = {mpmath.nstr(f1_rhs, 20)}")
    print(f"scalar update_norm u^2 = {mpmath.nstr(u2, 20)} rhs = {mpmath.nstr(f2_rhs, 20)}")

    s = Stream(42, [("noise", 3), ("client", 7)])
    print("stream u64:", [hex(s.u64()) for _ in range(3)])
    s = Stream(42, [("noise", 3), ("client", 7)])
    print("stream gaussians:", [repr(s.gaussian()) for _ in range(3)])

    optima, factors = quadratic_suite(0, 100, 200, 20, 0.05)
    qs = [a @ a.T for a in factors]
    eig = [power_iteration(q) for q in qs]
    total = sum(qs)
    rhs = sum(q @ o for q, o in zip(qs, optima))
    w_star = np.linalg.solve(total, rhs)
    gaps = [0.5 * float((w_star - o) @ q @ (w_star - o)) for q, o in zip(qs, optima)]
    print(f"suite L = {max(eig)!r} client0 = {eig[0]!r} min = {min(eig)!r}")
    print(f"suite f* = {float(np.mean(gaps))!r} max gap = {max(gaps)!r}")
    print(f"w*[0:3] = {w_star[:3].tolist()!r}")


if __name__ == "__main__":
    main()
