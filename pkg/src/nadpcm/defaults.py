"""Build constants shared across the codec.

These values are part of the codec definition: an encoder and a decoder
must agree on all of them, and none are carried in the bitstream header
(the header's format version stands in for the whole set). Changing any
constant here is a format change and requires bumping
``codec.BITSTREAM_VERSION``.
"""

SAMPLE_RATE_HZ = 8000

# Prediction input window: the predictors see the last 10 reconstructed
# samples, oldest first.
PREDICTION_ORDER = 10

DEFAULT_FRAME_LEN = 200  # 25 ms at 8 kHz

# Committee / network sizes.
COMMITTEE_SIZE = 5
MLP_HIDDEN_UNITS = 2
ELMAN_HIDDEN_UNITS = 2

# Gaussian radial layer: activation drops to 0.5 at a distance of one
# spread, which pins neuron bias = HALF_ACTIVATION_INPUT / spread.
HALF_ACTIVATION_INPUT = 0.8326
RBF_SPREAD = 0.22
RBF_MAX_NEURONS = 20
RBF_ERROR_GOAL = 0.0
RBF_RIDGE = 1e-10

# Adaptive quantizer: step multipliers indexed by code magnitude,
# one table per bit depth (2**(nq-1) entries each).
STEP_MULTIPLIERS = {
    2: (0.8, 1.6),
    3: (0.9, 0.9, 1.25, 1.75),
    4: (0.9, 0.9, 0.9, 0.9, 1.2, 1.6, 2.0, 2.4),
    5: (0.9, 0.9, 0.9, 0.9, 0.95, 0.95, 0.95, 0.95,
        1.2, 1.5, 1.8, 2.1, 2.4, 2.7, 3.0, 3.3),
}
STEP_INITIAL = 0.02
STEP_MIN = 1e-5
STEP_MAX = 0.5

# Damped least-squares training schedule.
LM_MU_INITIAL = 1e-3
LM_MU_INC = 10.0
LM_MU_DEC = 0.1
LM_MU_MIN = 1e-20
LM_MU_MAX = 1e10

# Regularization starts at pure least squares.
REG_ALPHA_INITIAL = 0.0
REG_BETA_INITIAL = 1.0

# Weight initialization range for random restarts.
INIT_WEIGHT_LOW = -0.5
INIT_WEIGHT_HIGH = 0.5

TRAINING_EPOCH_CHOICES = (6, 50)
NQ_CHOICES = (2, 3, 4, 5)
