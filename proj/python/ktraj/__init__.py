"""Learned per-frame k-space acquisition trajectories for dynamic MRI.

The heavy lifting lives in the compiled extension; this package re-exports
the core operators: trajectory initializers, the kinematic feasibility
projection, the non-uniform Fourier pair with coordinate gradients, phantom
generation and the image quality metrics.
"""

from ._core import (  # noqa: F401
    ArgumentError,
    ConfigError,
    GriddingKernel,
    IoError,
    KinematicLimits,
    __version__,
    adjoint_direct,
    adjoint_fast,
    audit,
    difference_bounds,
    forward_direct,
    forward_fast,
    fsim,
    generate_phantom,
    grad_wrt_coords,
    init_golden_angle,
    init_radial,
    load_trajectory,
    project_feasible,
    psnr,
    save_trajectory,
    vif,
)
