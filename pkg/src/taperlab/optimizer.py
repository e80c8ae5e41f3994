"""Joint learning of taper weights and a toy classifier by backprop.

The trainable spectrum estimate is S(f) = sum_j lambda_hat(j) P_j(f) per
frame, where the P_j are fixed sine-taper sub-spectra (cached per
utterance) and lambda is trained. Each utterance flows through
spectrum -> MFCC -> temporal mean pool -> linear projection ->
length-normalize -> additive-angular-margin softmax, and gradients are
chained back to lambda analytically.

Two weight constraints:
  - relu_l1: lambda is stored unconstrained but projected (ReLU then l1
    normalization, with a small floor) after every optimizer step and at
    every forward evaluation.
  - none: raw, possibly negative lambda is used during training; a single
    projection is applied when the learned bank is exported.
"""

import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .dsp import frame_signal
from .errors import ConfigError, DivergenceError, InputError, StaleCacheError
from .features import make_mel_filterbank, mfcc_backward, mfcc_forward
from .multitaper import TaperBank, make_swce_bank, sub_spectra, swce_weights

PROJECTION_FLOOR = 1e-8

INIT_KINDS = ("gaussian", "swce")
CONSTRAINT_KINDS = ("none", "relu_l1")


@dataclass(frozen=True)
class TrainConfig:
    init: str = "swce"
    constraint: str = "relu_l1"
    num_tapers: int = 8
    lr: float = 1e-3
    batch_size: int = 16
    epochs: int = 20
    seed: int = 0
    margin: float = 0.2
    scale: float = 30.0
    embed_dim: int = 16

    def __post_init__(self):
        if self.init not in INIT_KINDS:
            raise ConfigError(f"unknown init {self.init!r}")
        if self.constraint not in CONSTRAINT_KINDS:
            raise ConfigError(f"unknown constraint {self.constraint!r}")
        if self.num_tapers < 1:
            raise ConfigError(f"num_tapers must be >= 1, got {self.num_tapers}")
        # lr 0 is allowed on purpose: a no-op run is a useful diagnostic.
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be >= 1")


def project_weights(lam):
    """ReLU then l1 normalization with a small positive floor.

    Clips negatives to zero, floors each component at 1e-8 of the surviving
    mass, and normalizes to sum 1. All-nonpositive input maps to uniform.
    Already-valid distributions (all components above the floor, sum within
    1e-9 of 1) are returned unchanged, which makes the map exactly
    idempotent in floating point.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if lam.size > 0 and np.min(lam) >= 0.5 * PROJECTION_FLOOR \
            and abs(lam.sum() - 1.0) <= 1e-9:
        return lam.copy()
    r = np.maximum(lam, 0.0)
    mass = r.sum()
    if mass == 0.0:
        return np.full(lam.shape, 1.0 / lam.size)
    r = np.maximum(r, PROJECTION_FLOOR * mass)
    return r / r.sum()


def project_weights_backward(grad_out, lam):
    """Vector-Jacobian product of project_weights at lam.

    Floored components (clipped negatives, all-clipped degenerate case)
    get a zero subgradient; the epsilon-floor's coupling into other
    components is of relative size 1e-8 and is neglected.
    """
    lam = np.asarray(lam, dtype=np.float64)
    y = project_weights(lam)
    r = np.maximum(lam, 0.0)
    mass = r.sum()
    if mass == 0.0:
        return np.zeros_like(lam)
    active = lam > PROJECTION_FLOOR * mass
    total = np.maximum(r, PROJECTION_FLOOR * mass).sum()
    return np.where(active, (grad_out - grad_out @ y) / total, 0.0)


def init_lambda(config, frame_length, rng=None):
    """Initial weight vector: seeded standard normal, or the closed form."""
    if config.init == "swce":
        return swce_weights(config.num_tapers, frame_length)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return rng.standard_normal(config.num_tapers)


@dataclass(frozen=True, eq=False)
class ToyClassifier:
    """Linear projection to an embedding plus unit-norm class prototypes."""

    projection: np.ndarray  # (embed_dim, num_ceps), no bias
    prototypes: np.ndarray  # (num_classes, embed_dim), rows unit norm
    margin: float
    scale: float


def _renormalize_rows(mat):
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    # skip rows already unit-norm so a no-op update leaves bits untouched
    return np.where(np.abs(norms - 1.0) <= 1e-12, mat, mat / norms)


def init_classifier(config, num_ceps, num_classes, rng):
    proj = rng.standard_normal((config.embed_dim, num_ceps)) / np.sqrt(num_ceps)
    protos = rng.standard_normal((num_classes, config.embed_dim))
    protos = protos / np.linalg.norm(protos, axis=1, keepdims=True)
    return ToyClassifier(proj, protos, config.margin, config.scale)


class _Lineage:
    """Mutable revision counter shared by all states of one training run.

    adam_step bumps it, which is what lets backward() detect a cache taken
    before the parameters moved.
    """

    __slots__ = ("revision",)

    def __init__(self):
        self.revision = 0


@dataclass(frozen=True, eq=False)
class TrainState:
    """lambda (pre-projection), classifier, Adam moments, step counter."""

    lam: np.ndarray
    classifier: ToyClassifier
    m_lam: np.ndarray
    v_lam: np.ndarray
    m_proj: np.ndarray
    v_proj: np.ndarray
    m_proto: np.ndarray
    v_proto: np.ndarray
    step: int = 0
    lineage: _Lineage = None


def init_state(lam, classifier, constraint="relu_l1"):
    lam = np.asarray(lam, dtype=np.float64)
    if constraint == "relu_l1":
        lam = project_weights(lam)
    return TrainState(
        lam=lam, classifier=classifier,
        m_lam=np.zeros_like(lam), v_lam=np.zeros_like(lam),
        m_proj=np.zeros_like(classifier.projection),
        v_proj=np.zeros_like(classifier.projection),
        m_proto=np.zeros_like(classifier.prototypes),
        v_proto=np.zeros_like(classifier.prototypes),
        lineage=_Lineage())


@dataclass(frozen=True)
class Pipeline:
    """Fixed (non-trained) parts of the forward pass."""

    bank: TaperBank  # taper shapes; its weights are not used in training
    filterbank: object
    n_fft: int
    num_ceps: int
    log_floor: float


@dataclass
class PreparedUtterance:
    """One training utterance with its per-frame sub-spectra.

    sub has shape (frames, K, bins). When cache_sub is False the stack is
    recomputed from the stored frames on every access, which is the
    reference path the cache must match bit for bit.
    """

    utt_id: str
    label: int
    frames: np.ndarray
    sub: np.ndarray = None
    cache_sub: bool = True

    def sub_stack(self, pipeline):
        if self.cache_sub:
            if self.sub is None:
                self.sub = self._compute(pipeline)
            return self.sub
        return self._compute(pipeline)

    def _compute(self, pipeline):
        return np.stack([sub_spectra(f, pipeline.bank, pipeline.n_fft)
                         for f in self.frames])


def make_pipeline(feature_config, num_tapers):
    bank = make_swce_bank(num_tapers, feature_config.frame_length)
    return Pipeline(bank=bank,
                    filterbank=make_mel_filterbank(feature_config),
                    n_fft=feature_config.n_fft,
                    num_ceps=feature_config.num_ceps,
                    log_floor=feature_config.log_floor)


def prepare_corpus(utterances, feature_config, num_tapers, cache_sub=True):
    """Frame every utterance and precompute sub-spectra.

    utterances is an iterable of (utt_id, label, samples). Too-short
    signals are skipped with a warning. Returns (pipeline, prepared list,
    sorted label names).
    """
    pipeline = make_pipeline(feature_config, num_tapers)
    labels = sorted({label for _, label, _ in utterances})
    index = {name: i for i, name in enumerate(labels)}
    prepared = []
    for utt_id, label, samples in utterances:
        try:
            frames = frame_signal(samples, feature_config.frame_length,
                                  feature_config.frame_shift,
                                  pre_emphasis=feature_config.pre_emphasis,
                                  dither=feature_config.dither,
                                  dither_seed=feature_config.dither_seed)
        except InputError:
            warnings.warn(f"skipping {utt_id!r}: shorter than one frame")
            continue
        utt = PreparedUtterance(utt_id, index[label], frames, cache_sub=cache_sub)
        if cache_sub:
            utt.sub_stack(pipeline)
        prepared.append(utt)
    if not prepared:
        raise InputError("no utterance long enough to frame")
    return pipeline, prepared, labels


@dataclass
class ForwardCache:
    """Everything backward() needs, bound to the state it was computed from."""

    state: TrainState
    revision: int
    lam_hat: np.ndarray
    constrained: bool
    items: list
    batch_size: int


def forward_loss(batch, state, pipeline, config):
    """Mean AAM-softmax loss over a batch of prepared utterances.

    Returns (loss, cache). The cache is only valid until the next
    adam_step on this state.
    """
    if len(batch) == 0:
        raise InputError("empty batch")
    constrained = config.constraint == "relu_l1"
    lam_hat = project_weights(state.lam) if constrained else state.lam
    proj = state.classifier.projection
    protos = state.classifier.prototypes
    cos_m, sin_m = np.cos(config.margin), np.sin(config.margin)

    items = []
    total = 0.0
    for utt in batch:
        sub = utt.sub_stack(pipeline)                      # (F, K, B)
        spec = lam_hat[0] * sub[:, 0]
        for j in range(1, lam_hat.size):
            spec = spec + lam_hat[j] * sub[:, j]
        ceps, mcache = mfcc_forward(spec, pipeline.filterbank,
                                    pipeline.num_ceps, pipeline.log_floor)
        pooled = ceps.mean(axis=0)
        z = proj @ pooled
        norm = np.linalg.norm(z)
        emb = z / norm
        cos = protos @ emb                                 # (num_classes,)
        y = utt.label
        u = np.clip(cos[y], -1.0 + 1e-7, 1.0 - 1e-7)
        logits = config.scale * cos
        logits[y] = config.scale * (u * cos_m - np.sqrt(1.0 - u * u) * sin_m)
        lse = np.logaddexp.reduce(logits)
        total += lse - logits[y]
        items.append((utt, mcache, pooled, z, norm, emb, cos, u, logits, lse))
    loss = total / len(batch)
    revision = state.lineage.revision if state.lineage is not None else 0
    cache = ForwardCache(state=state, revision=revision, lam_hat=lam_hat,
                         constrained=constrained, items=items,
                         batch_size=len(batch))
    return loss, cache


@dataclass(frozen=True, eq=False)
class Gradients:
    lam: np.ndarray
    projection: np.ndarray
    prototypes: np.ndarray


def backward(cache, pipeline, config):
    """Analytic gradients of the batch loss for lambda and the classifier.

    Raises StaleCacheError if the state has been stepped since the forward
    pass that produced the cache.
    """
    state = cache.state
    if state.lineage is not None and state.lineage.revision != cache.revision:
        raise StaleCacheError(
            f"cache taken at revision {cache.revision}, parameters have "
            f"since moved to revision {state.lineage.revision}")
    proj = state.classifier.projection
    protos = state.classifier.prototypes
    cos_m, sin_m = np.cos(config.margin), np.sin(config.margin)

    g_lam_hat = np.zeros_like(cache.lam_hat)
    g_proj = np.zeros_like(proj)
    g_proto = np.zeros_like(protos)
    inv_b = 1.0 / cache.batch_size
    for utt, mcache, pooled, z, norm, emb, cos, u, logits, lse in cache.items:
        y = utt.label
        p = np.exp(logits - lse)
        d_logit = p * inv_b
        d_logit[y] -= inv_b
        d_cos = config.scale * d_logit
        # margin derivative; the clip on u zeroes out at the boundary
        du = cos_m + sin_m * u / np.sqrt(1.0 - u * u)
        interior = np.abs(cos[y]) < 1.0 - 1e-7
        d_cos[y] = config.scale * d_logit[y] * (du if interior else 0.0)
        g_proto += np.outer(d_cos, emb)
        d_emb = d_cos @ protos
        d_z = (d_emb - (d_emb @ emb) * emb) / norm
        g_proj += np.outer(d_z, pooled)
        d_pooled = proj.T @ d_z
        f = utt.frames.shape[0]
        d_ceps = np.tile(d_pooled / f, (f, 1))
        d_spec = mfcc_backward(d_ceps, mcache, pipeline.filterbank)
        g_lam_hat += np.einsum("fjb,fb->j", utt.sub_stack(pipeline), d_spec)
    if cache.constrained:
        g_lam = project_weights_backward(g_lam_hat, state.lam)
    else:
        g_lam = g_lam_hat
    return Gradients(g_lam, g_proj, g_proto)


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _adam_update(param, grad, m, v, step, lr):
    m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad
    v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad * grad
    m_hat = m / (1.0 - ADAM_BETA1 ** step)
    v_hat = v / (1.0 - ADAM_BETA2 ** step)
    return param - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS), m, v


def adam_step(state, grads, lr, constraint="relu_l1"):
    """One Adam update (beta1=0.9, beta2=0.999, eps=1e-8) on all parameters.

    Prototypes are re-normalized to unit length after the update; with the
    relu_l1 constraint, lambda is projected after the update. Returns a new
    TrainState with step incremented.
    """
    if grads.lam.shape != state.lam.shape \
            or grads.projection.shape != state.classifier.projection.shape \
            or grads.prototypes.shape != state.classifier.prototypes.shape:
        raise ConfigError("gradient shapes do not match parameters")
    step = state.step + 1
    lam, m_lam, v_lam = _adam_update(state.lam, grads.lam,
                                     state.m_lam, state.v_lam, step, lr)
    proj, m_proj, v_proj = _adam_update(state.classifier.projection,
                                        grads.projection,
                                        state.m_proj, state.v_proj, step, lr)
    proto, m_proto, v_proto = _adam_update(state.classifier.prototypes,
                                           grads.prototypes,
                                           state.m_proto, state.v_proto, step, lr)
    if constraint == "relu_l1":
        lam = project_weights(lam)
    classifier = replace(state.classifier,
                         projection=proj, prototypes=_renormalize_rows(proto))
    if state.lineage is not None:
        state.lineage.revision += 1
    return TrainState(lam=lam, classifier=classifier,
                      m_lam=m_lam, v_lam=v_lam, m_proj=m_proj, v_proj=v_proj,
                      m_proto=m_proto, v_proto=v_proto, step=step,
                      lineage=state.lineage)


@dataclass(frozen=True, eq=False)
class EpochRecord:
    epoch: int
    loss: float
    lam: np.ndarray

    def to_json_dict(self):
        lam_hat = project_weights(self.lam)
        return {"epoch": self.epoch, "loss": self.loss,
                "lambda": self.lam.tolist(),
                "top2_mass": top2_mass(lam_hat),
                "entropy": weight_entropy(lam_hat)}


def top2_mass(lam_hat):
    """Sum of the two largest components of the normalized weight vector."""
    w = np.maximum(np.asarray(lam_hat, dtype=np.float64), 0.0)
    p = w / w.sum()
    if p.size <= 2:
        return 1.0
    return float(np.sum(np.sort(p)[-2:]))


def weight_entropy(lam_hat):
    """Shannon entropy (natural log) of the normalized weight vector."""
    w = np.maximum(np.asarray(lam_hat, dtype=np.float64), 0.0)
    p = w / w.sum()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def weight_concentration(log):
    """Per-epoch top-2 mass and entropy of the (projected) weight vector."""
    if not log:
        raise InputError("empty training log")
    tops, ents = [], []
    for rec in log:
        lam_hat = project_weights(np.asarray(rec.lam))
        tops.append(top2_mass(lam_hat))
        ents.append(weight_entropy(lam_hat))
    return {"top2_mass": tops, "entropy": ents}


def train(utterances, config, feature_config=None):
    """Train lambda and the toy classifier on labeled utterances.

    Parameters
    ----------
    utterances : iterable of (utt_id, label, samples)
        Needs at least 2 classes and 2 utterances per class.
    config : TrainConfig
    feature_config : FeatureConfig, optional

    Returns
    -------
    (TaperBank, log, state)
        Learned bank (weights projected so they are strictly positive),
        per-epoch EpochRecord list, and the final TrainState.

    Raises
    ------
    DivergenceError if the loss goes non-finite.
    """
    from .features import FeatureConfig
    if feature_config is None:
        feature_config = FeatureConfig()
    utterances = list(utterances)
    counts = {}
    for _, label, _ in utterances:
        counts[label] = counts.get(label, 0) + 1
    if len(counts) < 2 or min(counts.values()) < 2:
        raise InputError(
            "training needs >= 2 classes with >= 2 utterances each, got "
            + ", ".join(f"{k}:{v}" for k, v in sorted(counts.items())))

    pipeline, prepared, labels = prepare_corpus(
        utterances, feature_config, config.num_tapers)
    prepared.sort(key=lambda u: u.utt_id)

    root = np.random.SeedSequence(config.seed)
    seq_init, seq_shuffle = root.spawn(2)
    rng_init = np.random.default_rng(seq_init)
    lam0 = init_lambda(config, feature_config.frame_length, rng=rng_init)
    classifier = init_classifier(config, feature_config.num_ceps,
                                 len(labels), rng_init)
    state = init_state(lam0, classifier, config.constraint)
    rng_shuffle = np.random.default_rng(seq_shuffle)

    log = []
    for epoch in range(config.epochs):
        order = rng_shuffle.permutation(len(prepared))
        seen = 0
        weighted = 0.0
        for start in range(0, len(prepared), config.batch_size):
            batch = [prepared[i] for i in order[start:start + config.batch_size]]
            loss, cache = forward_loss(batch, state, pipeline, config)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"loss diverged to {loss} at epoch {epoch}, step {state.step}")
            grads = backward(cache, pipeline, config)
            state = adam_step(state, grads, config.lr, config.constraint)
            weighted += loss * len(batch)
            seen += len(batch)
        log.append(EpochRecord(epoch=epoch, loss=weighted / seen,
                               lam=state.lam.copy()))

    # tapers stay the sine family throughout; only the weights were learned
    bank = TaperBank("swce", pipeline.bank.tapers, project_weights(state.lam))
    return bank, log, state


def save_training_log(log, path):
    """One JSON object per line: epoch, loss, lambda, top2_mass, entropy."""
    with open(path, "w") as fh:
        for rec in log:
            fh.write(json.dumps(rec.to_json_dict()) + "\n")


def load_training_log(path):
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            records.append(EpochRecord(epoch=doc["epoch"], loss=doc["loss"],
                                       lam=np.asarray(doc["lambda"])))
    return records


def save_checkpoint(directory, bank, classifier, labels=None):
    """Write bank.json plus classifier matrices as binary containers.

    Layout: bank.json (taper bank), projection.tplf and prototypes.tplf
    (parameter matrices), classifier.json (margin, scale, label names).
    """
    import os
    from .features import FeatureMatrix, save_features_tplf
    from .multitaper import save_bank
    os.makedirs(directory, exist_ok=True)
    save_bank(bank, os.path.join(directory, "bank.json"))
    save_features_tplf(FeatureMatrix(classifier.projection, "projection", ""),
                       os.path.join(directory, "projection.tplf"))
    save_features_tplf(FeatureMatrix(classifier.prototypes, "prototypes", ""),
                       os.path.join(directory, "prototypes.tplf"))
    meta = {"margin": classifier.margin, "scale": classifier.scale,
            "labels": list(labels) if labels is not None else None}
    with open(os.path.join(directory, "classifier.json"), "w") as fh:
        json.dump(meta, fh)
        fh.write("\n")


def load_checkpoint(directory):
    import os
    from .features import load_features_tplf
    from .multitaper import load_bank
    bank = load_bank(os.path.join(directory, "bank.json"))
    proj = load_features_tplf(os.path.join(directory, "projection.tplf"))
    protos = load_features_tplf(os.path.join(directory, "prototypes.tplf"))
    with open(os.path.join(directory, "classifier.json")) as fh:
        meta = json.load(fh)
    classifier = ToyClassifier(proj.data, protos.data,
                               meta["margin"], meta["scale"])
    return bank, classifier, meta.get("labels")
