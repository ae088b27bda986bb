from .data import (
    BAND_ORDER,
    N_CLASSES,
    ElectrodeMontage,
    FrameSequence,
    FrameSet,
    SplitPlan,
    Trial,
    TrialSet,
)
from .formats import (
    decode_trials,
    encode_trials,
    load_montage,
    load_trials,
    parse_montage,
    save_montage,
    save_trials,
)
from .split import leave_subject_out_plans, split_leave_subject_out
from .synth import (
    DEFAULT_CONFIG_PATH,
    ClassProfiles,
    SynthConfig,
    default_config,
    generate_synthetic,
    hemisphere_montage,
    load_synth_config,
    parse_class_profiles,
    parse_synth_config,
)
