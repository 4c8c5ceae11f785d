#!/usr/bin/env python3
"""Independent oracle for the orbit golden values frozen into test_orbit.cpp.

Evaluates the position chain literally (perifocal -> inertial -> Earth-fixed,
then the geocentric angle through arccos) with numpy, cell by cell.  It
shares no code with the C++ fast visibility route.  Run:

    python3 tests/oracles/orbit_golden.py
"""
import numpy as np

MU, J2, RE, WE = 398600.4418, 1.08262668e-3, 6378.137, 7.2921159e-5
A = 6896.27
INC = np.radians(98.0)
RAAN0 = np.radians(284.507)
G0 = np.radians(284.507)
LON, LAT, RHO = np.radians(121.3), np.radians(31.1), np.radians(9.45)
DT, N_STEPS = 5.0, 17280


def rz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


n = np.sqrt(MU / A**3)
cj2 = 1.5 * n * J2 * (RE / A) ** 2
b_raan = -cj2 * np.cos(INC)
b_m = n - cj2 * (1.5 * np.sin(INC) ** 2 - 1.0)


def sat_ecf(m0, theta, t):
    m = m0 + theta + b_m * t
    xo = np.array([A * np.cos(m), A * np.sin(m), 0.0])
    eci = rz(RAAN0 + b_raan * t) @ rx(INC) @ xo
    return rz(-(G0 + WE * t)) @ eci


tgt = RE * np.array([np.cos(LAT) * np.cos(LON), np.cos(LAT) * np.sin(LON), np.sin(LAT)])


def rho(m0, theta, t):
    x = sat_ecf(m0, theta, t)
    c = np.dot(tgt, x) / (np.linalg.norm(tgt) * np.linalg.norm(x))
    return np.arccos(np.clip(c, -1.0, 1.0))


def mask(m0, theta):
    r = np.array([rho(m0, theta, j * DT) for j in range(N_STEPS)])
    return r <= RHO, np.min(np.abs(r - RHO))


def runs(m):
    return int(np.sum(m[1:] & ~m[:-1]) + (1 if m[0] else 0))


print(f"n_M          = {n:.17e}")
print(f"period_s     = {2*np.pi/n:.17e}")
print(f"b_raan       = {b_raan:.17e}")
print(f"b_m          = {b_m:.17e}")
print("target       = " + " ".join(f"{v:.17e}" for v in tgt))
p = sat_ecf(0.0, 0.0, 1000.0)
print("sat1@1000    = " + " ".join(f"{v:.17e}" for v in p))
p = sat_ecf(np.radians(4 * 15.0), 0.1, 40000.0)
print("sat5,0.1@4e4 = " + " ".join(f"{v:.17e}" for v in p))

masks, margin = [], np.inf
for k in range(24):
    m, mg = mask(np.radians(15.0 * k), 0.0)
    masks.append(m)
    margin = min(margin, mg)
print(f"min |rho-rho_bar| over nominal constellation = {margin:.3e}")
print(f"sat1 cells   = {int(masks[0].sum())}  windows = {runs(masks[0])}")
u = np.zeros(N_STEPS, dtype=bool)
for m in masks:
    u |= m
print(f"union24 cells = {int(u.sum())}")
u = np.zeros(N_STEPS, dtype=bool)
for k, m in enumerate(masks):
    if k + 1 not in (10, 23):
        u |= m
print(f"union damaged(10,23) cells = {int(u.sum())}")
adj = [[k + 1 for k in range(24) if k != l and (masks[k] & masks[l]).any()] for l in range(24)]
print("theta=0 neighbor lists (1-based):")
for l in range(24):
    print(f"  {l+1}: {adj[l]}")
