"""Named experiment configurations.

There are no canonical parameter values for the regimes these presets
target, so the values are calibrated in-repo; each preset documents the
qualitative behavior it reproduces.  Presets are stored as
config text so ``preset = "name"`` expansion round-trips through the
standard parser.
"""

PRESETS = {
    # Walkers seeded near a horizontal line with a matching chemical
    # ridge: the lane stabilizes and carries traffic in both directions.
    "trail_seed": """
mode = particles
params.lambda = 0.2
params.chi = 0.4
params.tau = 0.02
params.sigma_x = 1e-4
params.sigma_theta = 0.3
params.sigma_c = 0.02
params.gamma = 3.0
params.mu = 3.0
particles.n = 400
particles.n_f = 12
particles.dt = 2e-3
particles.n_t = 3000
init.law = "near_trail"
init.x2 = 0.5
init.spread = 0.03
init.field = "ridge"
init.field_amp = 0.4
init.field_center = 0.5
init.field_width = 0.05
snapshots.schedule = "geometric"
snapshots.count = 8
seed = 7
out = "runs/trail_seed"
""",
    # Everyone starts at one point: the burst spreads, then reinforcing
    # lanes condense out of the cloud.
    "dirac_burst": """
mode = particles
params.lambda = 0.2
params.chi = 0.5
params.tau = 0.03
params.sigma_x = 1e-4
params.sigma_theta = 0.4
params.sigma_c = 0.02
params.gamma = 3.0
params.mu = 3.0
particles.n = 400
particles.n_f = 12
particles.dt = 2e-3
particles.n_t = 4000
init.law = "dirac"
init.x1 = 0.5
init.x2 = 0.5
init.theta = 0.0
snapshots.schedule = "geometric"
snapshots.count = 8
seed = 11
out = "runs/dirac_burst"
""",
    # Uniform start: lanes must self-organize from noise alone.
    "uniform_start": """
mode = particles
params.lambda = 0.2
params.chi = 0.8
params.tau = 0.03
params.sigma_x = 1e-4
params.sigma_theta = 0.3
params.sigma_c = 0.02
params.gamma = 2.5
params.mu = 4.0
particles.n = 400
particles.n_f = 12
particles.dt = 2e-3
particles.n_t = 4000
init.law = "uniform"
snapshots.schedule = "geometric"
snapshots.count = 8
seed = 13
out = "runs/uniform_start"
""",
    # Weakly diffusing chemical with short anticipation and a slower,
    # better-resolved walker cloud: localized, sharper structures.
    "low_viscosity": """
mode = particles
params.lambda = 0.1
params.chi = 0.5
params.tau = 0.01
params.sigma_x = 1e-4
params.sigma_theta = 0.4
params.sigma_c = 0.005
params.gamma = 3.0
params.mu = 3.0
particles.n = 400
particles.n_f = 20
particles.dt = 2e-3
particles.n_t = 4000
init.law = "uniform"
snapshots.schedule = "geometric"
snapshots.count = 8
seed = 17
out = "runs/low_viscosity"
""",
    # Reduced solver in the lane-forming regime: the uniform state is
    # linearly unstable at the first spatial mode only, and the steady
    # profile is a single ridge walked in both tangent directions.
    "fd_trail": """
mode = fd
params.lambda = 1.0
params.chi = 15.0
params.tau = 0.2
params.sigma_x = 0.05
params.sigma_theta = 0.5
params.sigma_c = 0.2
params.gamma = 1.0
params.mu = 1.0
fd.n_x = 128
fd.n_theta = 64
fd.dt = 1e-3
fd.t_max = 12.0
fd.tol = 1e-5
fd.c0 = "cosine"
fd.c0_amp = 0.1
fd.c0_mode = 1
snapshots.schedule = "geometric"
snapshots.count = 8
out = "runs/fd_trail"
""",
    # Weak chemical diffusion and short anticipation: sharper localized
    # patterns; upwind angular fluxes keep the sharp profile positive.
    "fd_low_viscosity": """
mode = fd
params.lambda = 1.0
params.chi = 20.0
params.tau = 0.05
params.sigma_x = 0.05
params.sigma_theta = 0.3
params.sigma_c = 0.05
params.gamma = 1.0
params.mu = 1.0
fd.n_x = 128
fd.n_theta = 64
fd.dt = 1e-3
fd.t_max = 10.0
fd.tol = 1e-5
fd.theta_upwind = true
fd.c0 = "cosine"
fd.c0_amp = 0.05
fd.c0_mode = 1
snapshots.schedule = "geometric"
snapshots.count = 8
out = "runs/fd_low_viscosity"
""",
    # Foraging extension: food and nest sites exchange the two
    # populations with a u-turn on switching, and each state follows a
    # smell gradient toward its goal.
    "fd_two_state": """
mode = fd2state
params.lambda = 1.0
params.chi = 10.0
params.tau = 0.15
params.sigma_x = 0.05
params.sigma_theta = 0.5
params.sigma_c = 0.3
params.gamma = 1.5
params.mu = 1.0
fd.n_x = 128
fd.n_theta = 64
fd.dt = 5e-3
fd.t_max = 10.0
fd.tol = 1e-6
fd2.alpha_peak = 2.0
fd2.alpha_center = 0.25
fd2.alpha_width = 0.1
fd2.beta_peak = 2.0
fd2.beta_center = 0.75
fd2.beta_width = 0.1
fd2.transition = "u_turn"
fd2.chi_a = 1.0
fd2.gamma_a = 1.0
fd2.sigma_a = 0.1
snapshots.schedule = "geometric"
snapshots.count = 8
out = "runs/fd_two_state"
""",
    # Crest terrain for the autonomous angle dynamics: bimodal stationary
    # law with antipodal modes.
    "azimuthal_crest": """
mode = azimuthal
params.chi = 2.0
params.tau = 1.0
azimuthal.a11 = 1.0
azimuthal.a22 = -1.0
azimuthal.n_bins = 64
azimuthal.dt = 1e-3
azimuthal.t_final = 20.0
azimuthal.n_samples = 10000
out = "runs/azimuthal_crest"
""",
    # Kernel norm families over the singular-dominated time window.
    "kernels_default": """
mode = kernels
kernels.t_min = 1e-3
kernels.t_max = 1e-1
kernels.t_count = 7
kernels.p_values = "1,2,5"
out = "runs/kernels"
""",
}
