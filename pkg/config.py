"""Application configuration constants."""

# Run config
SCHEMA_VERSION = 1
DEFAULT_SEED = 0

# Geometry
FOCUS_CONDITION_LIMIT = 1e12  # normal-equation cutoff for near-parallel axes
ROTATION_TOLERANCE = 1e-9
FIXED_PRESCALE_FACTOR = 0.5  # captures shipped with a near distance of 1.0

# Pose distribution (rescaled [-1, 1]^3 units)
ELLIPSE_AXIS_SCALE = 1.5  # x in-plane standard deviation
BSPLINE_DEGREE = 3
PERTURB_POSITION_RADIUS = 0.05
PERTURB_LOOKAT_RADIUS = 0.05
PERTURB_UP_ANGLE_MAX = 0.05  # rad
PERTURB_MAX_RESAMPLES = 16

# Voxel field
FIELD_RESOLUTION = 64
FIELD_BBOX_MIN = (-1.0, -1.0, -1.0)
FIELD_BBOX_MAX = (1.0, 1.0, 1.0)
DENSITY_INIT = -2.0  # near-transparent start
COLOR_INIT = 0.0  # mid-gray
CHECKPOINT_MAGIC = b"VOXF1"

# Renderer
NEAR = 0.5  # near plane expected by the conditioning renderer
FAR = 4.0
RENDER_SAMPLES = 128
RENDER_SIZE = 64  # matches the latent resolution
BACKGROUND = (0.0, 0.0, 0.0)
DEPTH_EPS = 1e-10
DISTORTION_WEIGHT = 0.01  # published baseline hyperparameter

# Diffusion
T_FLOOR = 1e-3
ALPHA_CLAMP = 1e-6
DDIM_STEPS = 10  # published
CFG_SCALE = 3.0  # published
CONDITIONING_DROPOUT = 0.1  # published
LATENT_SIZE = 64

# Conditioning renderer
COND_SAMPLES = 128  # published
COND_FEATURES = 16  # desk scale; published model uses 128
COND_BETA = 10.0
COND_POSENC_FREQS = 6
COND_BORDER_MARGIN = 0.5  # px
COND_PROJECTION_SEED = 1234
SUMMARY_SIZE = 16

# Losses and schedules
CHARBONNIER_EPS = 1e-3
TOTAL_ITERS = 1000  # published
T_MIN_START = 1.0  # published
T_MIN_END = 0.0  # published
T_MAX = 1.0  # published
LAMBDA_SAMPLE_START = 1.0  # published
LAMBDA_SAMPLE_END = 0.1  # published
FIXED_T_MIN = 0.02  # lower noise bound when annealing is disabled
REFERENCE_VIEWS = 3

# Optimizer
LR_DENSITY = 0.05
LR_COLOR = 0.05
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.99
ADAM_EPS = 1e-8
N_CONDITION_VIEWS = 3  # published

# Evaluation
PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# Synthetic scenes
SCENE_EXTENT = 0.8
SCENE_MAX_REJECTIONS = 1_000
AMBIENT = 0.3
LIGHT_DIRECTION = (0.4, -0.8, -0.45)  # world, y down
DATASET_RADIUS = 2.5
DATASET_ELEVATION = 0.8
DATASET_FOV_DEG = 40.0
DEFAULT_N_TRAIN = 3
DEFAULT_N_TEST = 3
HELDOUT_STRIDE = 8
