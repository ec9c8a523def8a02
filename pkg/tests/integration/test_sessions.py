"""
End-to-end sessions over both transports.

Bob, Alice and Carol run in one process, either over the in-process
channel pair or over loopback TCP. The runs are seeded, so the two
transports must give identical models and identical operation counts.
"""

import logging
import os
import threading
import time

import numpy as np
import pytest

from spamcraft.features import ingest_corpus
from spamcraft.learning import Model, auc, gradient, synthetic_dataset, train_online, update_weights
from spamcraft.reduction import get_reducer
from spamcraft.transport.channels import SocketChannel
from spamcraft.transport.session import (
    AliceEndpoint,
    BobEndpoint,
    ModelRegistry,
    SessionServer,
    _run_pair,
    run_eval_session,
    run_training_session,
)

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

WEIGHTS = np.array([0.5, -1.25, 0.0, 2.0, -0.75, 0.125])


def test_transports_agree(session_config):
    data = synthetic_dataset(30, 8, seed=41)
    inproc = run_training_session(session_config, data, under_test=True)
    sock = run_training_session(session_config.with_overrides(transport='socket'), data, under_test=True)
    logger.info("inproc: %s", inproc.summary())
    logger.info("socket: %s", sock.summary())

    assert inproc.rounds == sock.rounds == 3
    assert np.array_equal(inproc.model.w, sock.model.w)
    assert inproc.counters.to_dict() == sock.counters.to_dict()
    assert inproc.bytes_sent > 0 and sock.bytes_sent > 0

    plain = train_online(data.blocks(10), eta=0.01, dim=8)
    assert np.allclose(inproc.model.w, plain.w, atol=1e-5)


def test_session_timing_covers_every_step(session_config):
    report = run_training_session(session_config, synthetic_dataset(10, 4, seed=44), under_test=True)
    timing = report.timing
    assert not timing.empty
    assert (timing['seconds'] >= 0).all()


@pytest.mark.parametrize("transport", ['inproc', 'socket'])
def test_eval_session_matches_plaintext(session_config, keys256, transport):
    model = Model(WEIGHTS)
    documents = list(synthetic_dataset(12, 6, seed=42).vectors)
    config = session_config.with_overrides(transport=transport)
    report = run_eval_session(config, documents, keys=keys256, model=model, under_test=True)
    assert report.labels == [model.classify(x) for x in documents]
    assert report.counters['decryptions'] > 0


def test_endpoint_reuses_encrypted_weights(session_config, keys256):
    endpoint = BobEndpoint(keys256, ModelRegistry(Model(WEIGHTS)), session_config)
    documents = list(synthetic_dataset(3, 6, seed=45).vectors)
    first = run_eval_session(session_config, documents, endpoint=endpoint, under_test=True)
    second = run_eval_session(session_config, documents, endpoint=endpoint, under_test=True)
    assert first.labels == second.labels
    assert first.counters['encryptions'] - second.counters['encryptions'] == WEIGHTS.size


def test_sequential_alices_share_the_model(session_config, keys256):
    registry = ModelRegistry(Model.zeros(6, eta=0.01))
    endpoint = BobEndpoint(keys256, registry, session_config)
    part_a, part_b = synthetic_dataset(20, 6, seed=43).split(2)

    with SessionServer(('127.0.0.1', 0), endpoint) as server:
        port = server.server_address[1]
        for index, part in enumerate((part_a, part_b)):
            listener = threading.Thread(target=server.handle_request)
            listener.start()
            with SocketChannel.connect('127.0.0.1', port, 'alice', timeout=30.0) as channel:
                AliceEndpoint(part, session_config, index).run_training(channel)
            listener.join(30.0)
        server.server_close()

    assert len(server.results) == 2
    assert not any(isinstance(r, Exception) for r in server.results)
    assert registry.version == 2

    w1 = update_weights(np.zeros(6), gradient(np.zeros(6), part_a), 0.01)
    w2 = update_weights(w1, gradient(w1, part_b), 0.01)
    assert np.allclose(registry.model.w, w2, atol=5e-6)


class _FailingEndpoint(BobEndpoint):
    def serve_training(self, channel, hello):
        raise ValueError("training terms rejected")


@pytest.mark.parametrize("transport", ['inproc', 'socket'])
def test_bob_failure_surfaces_promptly(session_config, keys256, transport):
    config = session_config.with_overrides(transport=transport, timeout=20.0)
    endpoint = _FailingEndpoint(keys256, ModelRegistry(Model.zeros(6, eta=0.01)), config)
    alice = AliceEndpoint(synthetic_dataset(10, 6, seed=47), config, 0)

    started = time.perf_counter()
    with pytest.raises(ValueError, match="training terms rejected"):
        _run_pair(config, endpoint.serve, alice.run_training, endpoint)
    assert time.perf_counter() - started < 5.0


@pytest.mark.slow
def test_larger_run_tracks_plaintext(session_config):
    data = synthetic_dataset(500, 50, seed=46)
    train, test = data.subset(range(400)), data.subset(range(400, 500))
    config = session_config.with_overrides(key_bits=512, block_size=20)
    report = run_training_session(config, train, under_test=True)
    plain = train_online(train.blocks(20), eta=0.01, dim=50)

    print(f"\n{report.rounds} rounds in {report.wall_seconds:.1f}s")
    assert report.rounds == 20
    assert np.abs(report.model.w - plain.w).max() < 1e-4
    assert abs(auc(report.model.scores(test), test.labels) - auc(plain.scores(test), test.labels)) < 0.02


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get('SPAMCRAFT_CORPUS'), reason="SPAMCRAFT_CORPUS not set")
def test_private_run_on_corpus(session_config):
    dataset, manifest = ingest_corpus(os.environ['SPAMCRAFT_CORPUS'], limit=200)
    logger.info("Loaded %d documents", manifest.total)
    reducer = get_reducer('lsh', dataset.dim, 32, seed=1)
    reducer.fit(dataset)
    reduced = reducer.transform(dataset)

    report = run_training_session(session_config.with_overrides(block_size=20), reduced, under_test=True)
    plain = train_online(reduced.blocks(20), eta=0.01, dim=32)
    assert np.abs(report.model.w - plain.w).max() < 1e-4
