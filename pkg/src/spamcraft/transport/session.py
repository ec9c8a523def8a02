"""
Session orchestration.

Runs the training and evaluation state machines over a channel: a pair
of in-process queues, one TCP connection, or a threading TCP listener
serving many data owners against one model registry. Each session owns
its protocol state; the only shared object is Bob's ModelRegistry, whose
commit lock serializes weight commits.
"""

import logging
import socketserver
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor, wait
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import pandas as pd

from ..config import RunConfig, make_generator, make_random, parse_address
from ..crypto.fixedpoint import CodecParams
from ..crypto.paillier import KeyPair, keygen
from ..exceptions import (
    FrameError,
    HandshakeError,
    PeerAbort,
    ProtocolAbort,
    ProtocolStateError,
    ScaleMismatchError,
)
from ..features.vectors import SparseBinaryVector
from ..learning.dataset import LabeledDataset
from ..learning.logistic import Model
from ..protocol.blinding import BlindingSampler
from ..protocol.counters import OpCounters, StepTimer
from ..protocol.evaluation import BobEvaluator, CarolEvalSession
from ..protocol.training import (
    AliceTrainerState,
    BobTrainerState,
    aggregate_multi_party,
    alice_blind_margins,
    alice_encrypted_gradient,
    alice_finish_gradient,
    alice_unblind_and_scale,
    bob_exponentiate_share,
    bob_finish_round,
    bob_reciprocal,
    bob_start_round,
    new_session_id,
)
from .channels import BaseChannel, InProcChannel, SocketChannel
from .handshake import SessionTerms, client_confirm, client_hello, hello_int, parse_hello, server_accept
from .messages import MessageType, ProtocolMessage

logger = logging.getLogger(__name__)

ROUND = 'round'
CONTINUE = 'continue'
CONVERGED = 'converged'
CLASSIFY = 'classify'
DONE = 'done'

# Errors caused by a misbehaving peer; the local side answers with ABORT
_PEER_FAULTS = (ProtocolAbort, ProtocolStateError, FrameError, ScaleMismatchError)


@dataclass
class TrainingReport:
    """
    Outcome of one training session.

    Attributes:
        model (Model, optional): Trained model; None on Alice's side
        counters (OpCounters): Operations and traffic of the reporting side(s)
        timer (StepTimer): Wall-clock time per step group
        rounds (int): Completed rounds
        wall_seconds (float): Session duration
        converged (bool): Batch mode stopped on the tolerance
        bytes_sent (int): Frame bytes sent by the reporting side(s)
        bytes_received (int): Frame bytes received by the reporting side(s)
    """
    model: Optional[Model]
    counters: OpCounters
    timer: StepTimer
    rounds: int = 0
    wall_seconds: float = 0.0
    converged: bool = False
    bytes_sent: int = 0
    bytes_received: int = 0

    @property
    def timing(self) -> pd.DataFrame:
        return self.timer.to_frame()

    def merge(self, other: "TrainingReport") -> "TrainingReport":
        return TrainingReport(
            model=self.model if self.model is not None else other.model,
            counters=self.counters.merge(other.counters),
            timer=self.timer.merge(other.timer),
            rounds=max(self.rounds, other.rounds),
            wall_seconds=max(self.wall_seconds, other.wall_seconds),
            converged=self.converged or other.converged,
            bytes_sent=self.bytes_sent + other.bytes_sent,
            bytes_received=self.bytes_received + other.bytes_received,
        )

    def summary(self) -> Dict[str, object]:
        row: Dict[str, object] = {'rounds': self.rounds, 'wall_seconds': self.wall_seconds,
                                  'converged': self.converged, 'bytes_sent': self.bytes_sent}
        row.update(self.counters.to_dict())
        return row


@dataclass
class EvalReport:
    """Labels of one evaluation session with the operations it cost."""
    labels: List[int]
    counters: Dict[str, int] = field(default_factory=dict)
    wall_seconds: float = 0.0


class ModelRegistry:
    """
    Bob's current model, shared by concurrent sessions.

    A round starts from a snapshot; its commit applies the round's change
    to whatever model is current, under the commit lock.
    """

    def __init__(self, model: Model):
        self._model = model
        self._lock = threading.Lock()
        self.version = 0

    @property
    def model(self) -> Model:
        with self._lock:
            return self._model

    def commit(self, start: Model, end: Model) -> Model:
        with self._lock:
            if self._model is start:
                self._model = end
            else:
                self._model = self._model.with_weights(self._model.w + (end.w - start.w))
            self.version += 1
            return self._model


def _recv(channel: BaseChannel) -> ProtocolMessage:
    msg = channel.recv()
    if msg.type == MessageType.ABORT:
        raise PeerAbort(f"peer aborted: {msg.reason}")
    return msg


def _control(channel: BaseChannel, session_id: bytes, *accepted: str) -> Dict[str, str]:
    msg = _recv(channel)
    values = msg.as_mapping() if msg.type == MessageType.CONTROL else {}
    if values.get('control') not in accepted:
        raise ProtocolStateError(f"expected control {list(accepted)}, got {msg.type.name} {values.get('control')}")
    if msg.session_id != session_id:
        raise ProtocolStateError("control message belongs to a different session")
    return values


@contextmanager
def _abort_on_fault(channel: BaseChannel, session_id: Callable[[], bytes], on_abort=None) -> Iterator[None]:
    """Send ABORT for local faults, never for a peer's ABORT; then re-raise."""
    try:
        yield
    except PeerAbort:
        if on_abort is not None:
            on_abort()
        raise
    except _PEER_FAULTS as exc:
        if on_abort is not None:
            on_abort()
        logger.warning("%s: aborting session: %s", channel.name, exc)
        try:
            channel.send(ProtocolMessage.abort(str(exc), session_id()))
        except (OSError, FrameError):
            pass
        raise


class BobEndpoint:
    """
    Model owner: serves training and evaluation sessions.

    Args:
        keys (KeyPair): Bob's key pair
        registry (ModelRegistry): Model shared by every session
        config (RunConfig): Session parameters
    """

    def __init__(self, keys: KeyPair, registry: ModelRegistry, config: RunConfig):
        self.keys = keys
        self.registry = registry
        self.config = config
        self.codec = CodecParams.for_key(keys.public, config.scale)
        self._sessions = 0
        self._sessions_lock = threading.Lock()
        self._evaluator: Optional[BobEvaluator] = None
        self._evaluator_version = -1
        self.logger = logging.getLogger(__name__)

    def _next_index(self) -> int:
        with self._sessions_lock:
            self._sessions += 1
            return self._sessions

    def training_terms(self, block_size: int) -> SessionTerms:
        cfg = self.config
        plan = replace(cfg, block_size=block_size).scale_plan(self.keys.public.n)
        return SessionTerms('train', self.keys.public, cfg.scale, self.registry.model.dim,
                            block_size=block_size, eta=self.registry.model.eta,
                            reg_lambda=self.registry.model.reg_lambda, plan=plan)

    def evaluator(self) -> BobEvaluator:
        """Evaluator for the current model; E[w] is reused until the model changes."""
        with self._sessions_lock:
            if self._evaluator is None or self._evaluator_version != self.registry.version:
                self._evaluator = BobEvaluator(
                    self.keys, self.registry.model, self.config.scale, self.config.comparison_padding,
                    make_random(self.config.seed, f'bob-eval-{self.registry.version}'), self.config.workers)
                self._evaluator_version = self.registry.version
            return self._evaluator

    def serve(self, channel: BaseChannel):
        """Handle one connection: read the HELLO and run the session it asks for."""
        hello = channel.recv()
        try:
            values = parse_hello(hello)
        except HandshakeError as exc:
            channel.send(ProtocolMessage.abort(str(exc)))
            raise
        if values['hello'] == 'train':
            return self.serve_training(channel, hello)
        return self.serve_eval(channel, hello)

    def serve_training(self, channel: BaseChannel, hello: ProtocolMessage) -> TrainingReport:
        started = time.perf_counter()
        index = self._next_index()
        cfg = self.config
        session_id = new_session_id()
        try:
            values = parse_hello(hello)
            block_size = cfg.block_size
            if cfg.mode == 'batch' and hello_int(values, 'K') > 0:
                block_size = hello_int(values, 'K')
            terms = self.training_terms(block_size)
            reply = server_accept(hello, terms, session_id)
        except HandshakeError as exc:
            channel.send(ProtocolMessage.abort(str(exc), session_id))
            raise
        channel.send(reply)
        state = BobTrainerState(self.keys, self.registry.model, self.codec, terms.plan,
                                rng=make_random(cfg.seed, f'bob-train-{index}'), session_id=session_id,
                                workers=cfg.workers)
        converged = False
        with _abort_on_fault(channel, lambda: session_id, state.reset):
            while True:
                values = _control(channel, session_id, ROUND, DONE)
                if values['control'] == DONE:
                    break
                start = self.registry.model
                state.model = start
                channel.send(bob_start_round(state))
                channel.send(bob_exponentiate_share(state, _recv(channel)))
                channel.send(bob_reciprocal(state, _recv(channel)))
                end = bob_finish_round(state, _recv(channel))
                state.model = self.registry.commit(start, end)
                converged = cfg.mode == 'batch' and state.last_change < cfg.tol
                channel.send(ProtocolMessage.control(CONVERGED if converged else CONTINUE, session_id,
                                                     change=repr(state.last_change)))
        self.logger.info("Training session %d finished after %d rounds", index, state.rounds)
        return TrainingReport(self.registry.model, state.counters, state.timer, state.rounds,
                              time.perf_counter() - started, converged,
                              channel.bytes_sent, channel.bytes_received)

    def serve_eval(self, channel: BaseChannel, hello: ProtocolMessage) -> EvalReport:
        started = time.perf_counter()
        evaluator = self.evaluator()
        before = evaluator.counters.to_dict()
        session_id = new_session_id()
        params = evaluator.parameters()
        terms = SessionTerms('eval', self.keys.public, self.config.scale, params['d'],
                             margin_bound=params['margin_bound'], bit_width=params['bit_width'])
        try:
            reply = server_accept(hello, terms, session_id)
        except HandshakeError as exc:
            channel.send(ProtocolMessage.abort(str(exc), session_id))
            raise
        channel.send(reply)
        labels = []
        with _abort_on_fault(channel, lambda: session_id):
            while True:
                values = _control(channel, session_id, CLASSIFY, DONE)
                if values['control'] == DONE:
                    break
                session = evaluator.start_session(session_id)
                channel.send(session.send_weights())
                channel.send(session.receive_share(_recv(channel)))
                channel.send(session.receive_terms(_recv(channel)))
                labels.append(session.label)
        after = evaluator.counters.to_dict()
        self.logger.info("Evaluation session classified %d documents", len(labels))
        return EvalReport(labels, {k: after[k] - before[k] for k in after}, time.perf_counter() - started)


class AliceEndpoint:
    """
    Data owner: drives training rounds over her labeled documents.

    Online mode sends one round per block of K instances for every pass;
    batch mode sends the whole dataset each round until Bob reports
    convergence or the round limit is reached.
    """

    def __init__(self, dataset: LabeledDataset, config: RunConfig, index: int = 0):
        if dataset.n == 0:
            raise ValueError("a training session needs at least one instance")
        self.dataset = dataset
        self.config = config
        self.index = index
        self.logger = logging.getLogger(__name__)

    @property
    def block_size(self) -> int:
        return self.dataset.n if self.config.mode == 'batch' else self.config.block_size

    def schedule(self) -> Iterator[LabeledDataset]:
        if self.config.mode == 'batch':
            for _ in range(self.config.rounds):
                yield self.dataset
        else:
            for _ in range(self.config.passes):
                yield from self.dataset.blocks(self.config.block_size)

    def run_training(self, channel: BaseChannel) -> TrainingReport:
        started = time.perf_counter()
        cfg = self.config
        channel.send(client_hello('train', self.dataset.dim, cfg.scale, cfg.key_bits, self.block_size))
        reply = channel.recv()
        terms = client_confirm(reply, 'train', d=self.dataset.dim, C=cfg.scale)
        session_id = reply.session_id
        codec = CodecParams.for_key(terms.public_key, terms.C)
        sampler = BlindingSampler(terms.plan.blind_bound, terms.plan.q_bound,
                                  make_generator(cfg.seed, f'alice-blinds-{self.index}'))
        schedule = self.schedule()
        state = AliceTrainerState(terms.public_key, codec, terms.plan, next(schedule), terms.eta,
                                  terms.reg_lambda, sampler, make_random(cfg.seed, f'alice-train-{self.index}'),
                                  session_id, cfg.workers)
        rounds, converged = 0, False
        with _abort_on_fault(channel, lambda: session_id, lambda: state.abort("session aborted")):
            block: Optional[LabeledDataset] = state.block
            while block is not None:
                if rounds:
                    state.start_block(block)
                channel.send(ProtocolMessage.control(ROUND, session_id))
                channel.send(alice_blind_margins(state, _recv(channel)))
                channel.send(alice_unblind_and_scale(state, _recv(channel)))
                channel.send(alice_finish_gradient(state, _recv(channel)))
                values = _control(channel, session_id, CONTINUE, CONVERGED)
                rounds += 1
                self.logger.debug("Round %d done, weight change %s", rounds, values.get('change'))
                if values['control'] == CONVERGED:
                    converged = True
                    break
                block = next(schedule, None)
            channel.send(ProtocolMessage.control(DONE, session_id))
        self.logger.info("Alice %d finished %d rounds", self.index, rounds)
        return TrainingReport(None, state.counters, state.timer, rounds, time.perf_counter() - started,
                              converged, channel.bytes_sent, channel.bytes_received)


class CarolEndpoint:
    """Document owner: classifies documents against Bob's model."""

    def __init__(self, config: RunConfig, index: int = 0):
        self.config = config
        self.index = index
        self.logger = logging.getLogger(__name__)

    def run_eval(self, channel: BaseChannel, documents: Sequence[SparseBinaryVector]) -> EvalReport:
        started = time.perf_counter()
        d = documents[0].dim if documents else 0
        channel.send(client_hello('eval', d, self.config.scale, self.config.key_bits))
        reply = channel.recv()
        terms = client_confirm(reply, 'eval', d=d, C=self.config.scale)
        session_id = reply.session_id
        rng = make_random(self.config.seed, f'carol-eval-{self.index}')
        labels, counters = [], OpCounters()
        with _abort_on_fault(channel, lambda: session_id):
            for x in documents:
                carol = CarolEvalSession(terms.public_key, x, terms.margin_bound, terms.bit_width, rng, session_id)
                channel.send(ProtocolMessage.control(CLASSIFY, session_id))
                channel.send(carol.receive_weights(_recv(channel)))
                channel.send(carol.receive_bits(_recv(channel)))
                labels.append(carol.receive_result(_recv(channel)))
                counters = counters.merge(carol.counters)
            channel.send(ProtocolMessage.control(DONE, session_id))
        return EvalReport(labels, counters.to_dict(), time.perf_counter() - started)


class _SessionHandler(socketserver.BaseRequestHandler):
    def handle(self):
        server: "SessionServer" = self.server
        channel = SocketChannel(self.request, f'bob@{self.client_address[0]}:{self.client_address[1]}',
                                server.endpoint.config.max_frame_bytes, server.endpoint.config.timeout)
        try:
            report = server.endpoint.serve(channel)
        except Exception as exc:
            logger.error("Session from %s failed: %s", self.client_address, exc)
            server.record(exc)
        else:
            server.record(report)


class SessionServer(socketserver.ThreadingTCPServer):
    """Threading TCP listener; one thread per connected Alice or Carol."""

    allow_reuse_address = True
    daemon_threads = False

    def __init__(self, address: Tuple[str, int], endpoint: BobEndpoint):
        super().__init__(address, _SessionHandler)
        self.endpoint = endpoint
        self.results: List[object] = []
        self._results_lock = threading.Lock()

    def record(self, result) -> None:
        with self._results_lock:
            self.results.append(result)


def _first_result(server: SessionServer):
    if not server.results:
        raise ConnectionError("no session was served")
    result = server.results[0]
    if isinstance(result, Exception):
        raise result
    return result


def _bob_keys(config: RunConfig, keys: Optional[KeyPair]) -> KeyPair:
    if keys is not None:
        return keys
    return keygen(config.key_bits, make_random(config.seed, 'keygen'))


def serve_sessions(endpoint: BobEndpoint, address: Optional[str] = None,
                   max_sessions: Optional[int] = None) -> List[object]:
    """
    Listen on ``address`` and serve sessions until ``max_sessions`` have connected.

    Returns:
        list: One report (or the exception it failed with) per session
    """
    host, port = parse_address(address or endpoint.config.address)
    with SessionServer((host, port), endpoint) as server:
        logger.info("Listening on %s:%d", *server.server_address[:2])
        if max_sessions is None:
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                logger.info("Listener interrupted")
        else:
            for _ in range(max_sessions):
                server.handle_request()
        server.server_close()
        return list(server.results)


def _closing_on_error(side: Callable[[BaseChannel], object], channel: BaseChannel) -> Callable[[], object]:
    """Wrap Bob's side so any failure closes his channel and unblocks the client at once."""
    def run():
        try:
            return side(channel)
        except BaseException:
            channel.close()
            raise
    return run


def _bob_failure(future: Future, timeout: Optional[float]) -> Optional[BaseException]:
    done, _ = wait([future], timeout=timeout)
    return future.exception() if done else None


def _run_pair(config: RunConfig, bob_side: Callable[[BaseChannel], object],
              client_side: Callable[[BaseChannel], object], endpoint: BobEndpoint):
    """
    Run Bob and one client in this process over the configured transport.

    When the client fails because Bob went away (closed channel or ABORT),
    Bob's own exception is raised instead, chained to the client's.
    """
    if config.transport == 'inproc':
        bob_channel, client_channel = InProcChannel.pair(('bob', 'client'), config.max_frame_bytes, config.timeout)
        with ThreadPoolExecutor(max_workers=1) as pool:
            future = pool.submit(_closing_on_error(bob_side, bob_channel))
            try:
                client_result = client_side(client_channel)
            except (ConnectionError, PeerAbort) as exc:
                client_channel.close()
                bob_error = _bob_failure(future, config.timeout)
                if bob_error is None:
                    raise
                raise bob_error from exc
            finally:
                client_channel.close()
            bob_result = future.result(timeout=config.timeout)
        return bob_result, client_result
    host, _ = parse_address(config.address)
    with SessionServer((host, 0), endpoint) as server:
        listener = threading.Thread(target=server.handle_request, daemon=True)
        listener.start()
        port = server.server_address[1]
        with SocketChannel.connect(host, port, 'client', config.max_frame_bytes, config.timeout) as channel:
            try:
                client_result = client_side(channel)
            except (ConnectionError, PeerAbort) as exc:
                listener.join(config.timeout)
                server.server_close()
                bob_error = next((r for r in server.results if isinstance(r, Exception)), None)
                if bob_error is None:
                    raise
                raise bob_error from exc
        listener.join(config.timeout)
        server.server_close()
        return _first_result(server), client_result


def run_training_session(config: RunConfig, dataset: Optional[LabeledDataset] = None, role: str = 'both',
                         keys: Optional[KeyPair] = None, model: Optional[Model] = None,
                         registry: Optional[ModelRegistry] = None,
                         under_test: bool = False) -> TrainingReport:
    """
    Run one private training session.

    Args:
        config (RunConfig): Validated before anything else happens
        dataset (LabeledDataset, optional): Alice's documents (roles both and alice)
        role (str): 'both' (Bob and Alice in this process), 'bob' (serve one
            session on config.address) or 'alice' (connect to config.address)
        keys (KeyPair, optional): Bob's keys; generated from the seed when omitted
        model (Model, optional): Starting model; zeros of the dataset dimension when omitted
        registry (ModelRegistry, optional): Shared registry for Bob
        under_test (bool): Lift the insecure-key guard

    Returns:
        TrainingReport: Bob's model with the merged counters and timings for
        'both'; the reporting side's own figures otherwise

    Raises:
        ConfigurationError: If the config is invalid
        HandshakeError: If the peers disagree on the session terms
        ProtocolAbort: If either side aborts a round
    """
    config.validate(under_test)
    if role not in ('both', 'bob', 'alice'):
        raise ValueError(f"role must be both, bob or alice, got '{role}'")
    if role == 'alice':
        if dataset is None:
            raise ValueError("Alice needs a dataset")
        alice = AliceEndpoint(dataset, config)
        host, port = parse_address(config.address)
        with SocketChannel.connect(host, port, 'alice', config.max_frame_bytes, config.timeout) as channel:
            return alice.run_training(channel)

    keys = _bob_keys(config, keys)
    if registry is None:
        if model is None:
            if dataset is None:
                raise ValueError("Bob needs a starting model or a dataset to size one")
            model = Model.zeros(dataset.dim, config.eta, config.reg_lambda)
        registry = ModelRegistry(model)
    endpoint = BobEndpoint(keys, registry, config)
    if role == 'bob':
        result = serve_sessions(endpoint, max_sessions=1)
        if not result:
            raise ConnectionError("no session was served")
        if isinstance(result[0], Exception):
            raise result[0]
        return result[0]

    if dataset is None:
        raise ValueError("an in-process session needs a dataset")
    alice = AliceEndpoint(dataset, config)
    bob_report, alice_report = _run_pair(
        config, lambda ch: endpoint.serve(ch), alice.run_training, endpoint)
    report = bob_report.merge(alice_report)
    logger.info("Training finished: %d rounds, %d encryptions, %d decryptions",
                report.rounds, report.counters.encryptions, report.counters.decryptions)
    return report


def run_eval_session(config: RunConfig, documents: Sequence[SparseBinaryVector], role: str = 'both',
                     keys: Optional[KeyPair] = None, model: Optional[Model] = None,
                     endpoint: Optional[BobEndpoint] = None, under_test: bool = False) -> EvalReport:
    """
    Classify documents privately.

    Pass the same ``endpoint`` to later calls to reuse Bob's precomputed E[w].

    Returns:
        EvalReport: Carol's labels; counters cover both sides for role 'both'
    """
    config.validate(under_test)
    if role == 'carol':
        host, port = parse_address(config.address)
        with SocketChannel.connect(host, port, 'carol', config.max_frame_bytes, config.timeout) as channel:
            return CarolEndpoint(config).run_eval(channel, documents)
    if role != 'both':
        raise ValueError(f"role must be both or carol, got '{role}'")
    if not documents:
        raise ValueError("no documents to classify")
    if endpoint is None:
        if model is None:
            raise ValueError("Bob needs a model")
        endpoint = BobEndpoint(_bob_keys(config, keys), ModelRegistry(model), config)
    carol = CarolEndpoint(config)
    bob_report, carol_report = _run_pair(
        config, lambda ch: endpoint.serve(ch), lambda ch: carol.run_eval(ch, documents), endpoint)
    counters = {k: bob_report.counters.get(k, 0) + carol_report.counters.get(k, 0)
                for k in set(bob_report.counters) | set(carol_report.counters)}
    return EvalReport(carol_report.labels, counters, carol_report.wall_seconds)


def run_multi_party_round(bob: BobTrainerState, alices: Sequence[AliceTrainerState]) -> Model:
    """
    One aggregated update from several data owners.

    Each owner runs a round up to the gradient with Bob and hands back E[grad]; Bob sums
    the encrypted gradients and applies a single update.
    """
    if not alices:
        raise ValueError("no data owners")
    gradients = []
    for alice in alices:
        bob.reset()
        msg = bob_start_round(bob)
        msg = bob_exponentiate_share(bob, alice_blind_margins(alice, msg))
        msg = bob_reciprocal(bob, alice_unblind_and_scale(alice, msg))
        gradients.append(alice_encrypted_gradient(alice, msg))
    return aggregate_multi_party(bob, gradients)
