"""Hot single-run simulation kernels.

One Monte Carlo run of the network filter (distributed or non-cooperative)
over K steps, with all noise pre-drawn outside so results are independent
of worker layout.  Compiled with numba when available; the identical code
runs as plain numpy otherwise (see :mod:`diffkf._accel`).

Status codes: 0 = ok, 1 = non-finite covariance encountered (the step
index is returned alongside).
"""

import numpy as np

from ._accel import njit

__all__ = ["simulate_run", "STATUS_OK", "STATUS_NOT_FINITE"]

STATUS_OK = 0
STATUS_NOT_FINITE = 1


@njit(cache=True)
def simulate_run(
    distributed,     # bool; False skips the combine phase
    adj,             # (n, n) column weights a[l, i]
    A,               # (n, m, m) regressor state transitions
    B,               # (n, m, p) innovation input maps
    C,               # (n, m, m) regressor output maps
    x0,              # (n, m) initial generator states
    theta0,          # (m,) initial true parameter
    theta_hat0,      # (n, m) initial estimates
    P0,              # (n, m, m) initial covariances
    Q,               # (m, m) prior increment covariance
    r,               # (n,) prior noise variances
    delta_seq,       # (K, m) parameter increments, delta_seq[k] applied after step k
    xi_seq,          # (K, n, p) regressor innovations, xi_seq[k] advances x after step k
    v_seq,           # (K, n) observation noises
    record_at,       # (K + 1,) int64; record_at[k] = output row for index k, or -1
    n_records,       # number of recorded indices
):
    n, m = theta_hat0.shape
    K = v_seq.shape[0]
    x = x0.copy()
    theta = theta0.copy()
    th = theta_hat0.copy()
    P = P0.copy()
    phi = np.empty((n, m))
    theta_bar = np.empty((n, m))
    P_bar = np.empty((n, m, m))
    P_bar_inv = np.empty((n, m, m))
    err_sq = np.zeros((n_records, n))

    for k in range(K):
        for i in range(n):
            phi[i] = C[i] @ x[i]

        # Adapt: local covariance-form update per sensor.
        for i in range(n):
            y = phi[i] @ theta + v_seq[k, i]
            P_phi = P[i] @ phi[i]
            denom = r[i] + phi[i] @ P_phi
            innovation = y - phi[i] @ th[i]
            theta_bar[i] = th[i] + P_phi * (innovation / denom)
            M = P[i] - np.outer(P_phi, P_phi) / denom + Q
            P_bar[i] = 0.5 * (M + M.T)

        # Non-finite covariances would make the inversions below raise
        # instead of returning; catch them first.
        if not np.isfinite(P_bar).all():
            return err_sq, STATUS_NOT_FINITE, k

        # Combine: fuse neighborhood inverse covariances and estimates.
        if distributed:
            for l in range(n):
                P_bar_inv[l] = np.linalg.inv(P_bar[l])
            for i in range(n):
                info_sum = np.zeros((m, m))
                info_mean = np.zeros(m)
                for l in range(n):
                    w = adj[l, i]
                    if w > 0.0:
                        info_sum += w * P_bar_inv[l]
                        info_mean += w * (P_bar_inv[l] @ theta_bar[l])
                P_next = np.linalg.inv(info_sum)
                P[i] = 0.5 * (P_next + P_next.T)
                th[i] = P[i] @ info_mean
        else:
            for i in range(n):
                P[i] = P_bar[i]
                th[i] = theta_bar[i]

        if not np.isfinite(P).all():
            return err_sq, STATUS_NOT_FINITE, k

        theta = theta + delta_seq[k]
        for i in range(n):
            x[i] = A[i] @ x[i] + B[i] @ xi_seq[k, i]

        row = record_at[k + 1]
        if row >= 0:
            for i in range(n):
                diff = th[i] - theta
                err_sq[row, i] = diff @ diff

    return err_sq, STATUS_OK, K
