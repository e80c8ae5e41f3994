"""Walk a waveform through the cepstral front end.

Takes one toy utterance, frames it, estimates per-frame spectra with
the baseline Hamming bank and an 8-taper sine bank, and compares the
resulting mel cepstra. Also round-trips the feature matrix through the
binary container and the CSV writer.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from taperlab import (FeatureConfig, ToyCorpusSpec, extract_utterance,
                      load_features_csv, load_features_tplf,
                      make_mel_filterbank, make_swce_bank, make_toy_corpus,
                      save_features_csv, save_features_tplf)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

utt = make_toy_corpus(ToyCorpusSpec(num_speakers=3, duration_seconds=1.0,
                                    seed=11))[25]
cfg = FeatureConfig()
print(f"utterance {utt.utt_id}: {utt.samples.size} samples "
      f"at {cfg.sample_rate} Hz")

feats_ham = extract_utterance(utt.samples, cfg, source_id=utt.utt_id)
cfg_swce = FeatureConfig(estimator=make_swce_bank(8, cfg.frame_length))
feats_swce = extract_utterance(utt.samples, cfg_swce, source_id=utt.utt_id)
print("feature matrix:", feats_ham.data.shape,
      "config hash", feats_ham.config_hash)

# the two estimators agree on the coarse shape but the multi-taper
# cepstra are visibly smoother frame to frame
fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
for ax, fm, title in ((axes[0], feats_ham, "Hamming baseline"),
                      (axes[1], feats_swce, "SWCE K=8")):
    im = ax.imshow(fm.data.T, aspect="auto", origin="lower",
                   interpolation="nearest")
    ax.set_ylabel("cepstral index")
    ax.set_title(title)
    fig.colorbar(im, ax=ax)
diff = feats_swce.data - feats_ham.data
axes[2].plot(feats_ham.data[:, 1], label="Hamming", color="k", lw=0.8)
axes[2].plot(feats_swce.data[:, 1], label="SWCE K=8", lw=0.8)
axes[2].set_xlabel("frame")
axes[2].set_ylabel("c1")
axes[2].legend()
axes[2].set_title(f"c1 track (max abs difference {np.abs(diff).max():.2f})")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "mfcc_front_end.png"), dpi=120)
print("wrote", os.path.join(OUT, "mfcc_front_end.png"))

# the mel filterbank behind the cepstra
mel = make_mel_filterbank(cfg)
fig, ax = plt.subplots(figsize=(8, 3))
freqs = np.arange(cfg.n_fft // 2 + 1) * cfg.sample_rate / cfg.n_fft
for row in mel.matrix[::4]:
    ax.plot(freqs, row, lw=0.8)
ax.set_xlabel("frequency (Hz)")
ax.set_title(f"every fourth mel filter ({mel.f_low:.0f} to {mel.f_high:.0f} Hz)")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "mel_filterbank.png"), dpi=120)
print("wrote", os.path.join(OUT, "mel_filterbank.png"))

# container round trips are exact
tplf = os.path.join(OUT, "demo.tplf")
csv = os.path.join(OUT, "demo.csv")
save_features_tplf(feats_swce, tplf)
save_features_csv(feats_swce, csv)
back = load_features_tplf(tplf)
assert np.array_equal(back.data, feats_swce.data)
assert back.config_hash == feats_swce.config_hash
assert np.array_equal(load_features_csv(csv).data, feats_swce.data)
print("binary and CSV round trips are bit exact")
