"""Learnable weighted multi-taper spectrum estimation for speech features.

The package covers the full loop: sine taper banks with closed-form
weights, the weighted multi-taper power spectrum, an MFCC front end that
is differentiable with respect to the spectrum, joint training of the
taper weights with a toy classifier, and a tone-leakage study comparing
estimators against an impulsive ground truth.
"""

from .audio import (CorpusUtterance, ToyCorpusSpec, load_manifest,
                    make_toy_corpus, read_wav, write_corpus, write_wav)
from .dsp import frame_signal, make_window, real_dft_power
from .errors import (ConfigError, DivergenceError, InputError,
                     InvalidCenterError, ShapeError, StaleCacheError,
                     TaperlabError)
from .features import (FeatureConfig, FeatureMatrix, MelFilterbank,
                       config_hash, extract_utterance, hz_to_mel,
                       load_features_csv, load_features_tplf,
                       make_mel_filterbank, mel_to_hz, mfcc, mfcc_backward,
                       mfcc_forward, save_features_csv, save_features_tplf)
from .leakage import (LeakageReport, SyntheticSignalSpec, attenuation_width,
                      ground_truth_spectrum, itakura_saito, leakage_study,
                      measure_attenuation, save_report_csv, save_report_json,
                      save_spectra_csv, synth_signal)
from .multitaper import (TaperBank, bank_at_frame_length, combine_sub_spectra,
                         load_bank, make_rectangular_bank,
                         make_single_hamming_bank, make_swce_bank,
                         multitaper_power, save_bank, sub_spectra,
                         swce_weights, taper_orthonormality_check)
from .optimizer import (EpochRecord, Gradients, ToyClassifier, TrainConfig,
                        TrainState, adam_step, backward, forward_loss,
                        init_classifier, init_lambda, init_state,
                        load_checkpoint, load_training_log, make_pipeline,
                        prepare_corpus, project_weights,
                        project_weights_backward, save_checkpoint,
                        save_training_log, top2_mass, train,
                        weight_concentration, weight_entropy)

__version__ = "0.1.0"
