import numpy as np
import pytest

from plfkit import phonology, synthcorpus
from plfkit.plfnet.frontend import FrontEndConfig
from plfkit.plfnet.model import TrainConfig
from plfkit.plfnet.training import TrainUtterance, train


@pytest.fixture(scope="session")
def demo_spec():
    return phonology.load_demo_spec()


@pytest.fixture(scope="session")
def template_spec():
    return phonology.load_template_spec()


# small front end + short schedule: fast enough for pipeline tests, accurate
# enough (~0.9 frame accuracy) for decode/PER sanity checks
FAST_FRONTEND = FrontEndConfig(channels=(8, 16), time_strides=(1, 2), embed_dim=64)
FAST_TRAIN = TrainConfig(epochs=8, frontend=FAST_FRONTEND, seed=0)


@pytest.fixture(scope="session")
def tiny_corpus(demo_spec):
    cfg = synthcorpus.SynthConfig(
        speaker_classes=(synthcorpus.SpeakerClass("healthy", 6),),
        utterances_per_speaker=2,
        noise_sigma=0.3,
        seed=5,
    )
    return synthcorpus.generate(cfg, demo_spec)


@pytest.fixture(scope="session")
def fast_ckpt(demo_spec, tiny_corpus):
    corpus = [TrainUtterance(r.utt_id, r.frames, r.labels) for r in tiny_corpus]
    return train(corpus, demo_spec, FAST_TRAIN)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
