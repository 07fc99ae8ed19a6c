"""Fitted constants of the analytic bound shapes on coarse and refined grids."""
import numpy as np

from selberg_lab import transforms as tr


def fit(values, shapes):
    return tr.fit_constant(values, shapes)


def main():
    rows = []
    tf = tr.TestFunction.B(0.3, 0.8, 2.0)
    for n in (60, 119):
        u = np.linspace(1.0, 24.0, n)
        rows.append(("g' family B", n, fit(tr.numeric_g(tf, u, derivative=True), tr.fourier_shape(u, tf, 1.0))))
    tfH = tr.TestFunction.H(0.5, 5.0, 1.0)
    prof = tr.KernelProfile(tfH)
    for n in (30, 59):
        rho = np.linspace(0.5, 12.0, n)
        rows.append(("K family H", n, fit(tr.kernel_values(rho, prof).K, tr.kernel_shape_H(rho, tfH, 0.5))))
    for n in (8, 15):
        ts = np.geomspace(2.0, 40.0, n)
        vals = [tr.integral_remainder(tr.TestFunction.B(0.3, 0.8, float(t))).value for t in ts]
        rows.append(("R_I family B", n, fit(vals, 1.0 / ts)))
    for name, n, C in rows:
        print(f"{name:14s} grid {n:4d}  C = {C:.5g}")


if __name__ == "__main__":
    main()
