import argparse
import logging
import sys

import numpy as np

# Import spamcraft registries and entry points
from spamcraft.benchmarking import BENCHMARKER_REGISTRY, expand_grid, get_benchmarker
from spamcraft.config import RunConfig, load_config, make_generator, make_random, seed_for
from spamcraft.crypto import keygen, load_keypair, save_keypair
from spamcraft.exceptions import ConfigurationError, SpamcraftError
from spamcraft.features import dump_vectors, ingest_corpus
from spamcraft.learning import (LabeledDataset, Model, accuracy, auc, cross_validate, load_model,
                                majority_baseline, save_model, synthetic_dataset, train_batch, train_dense,
                                train_online)
from spamcraft.protocol.training import margin_reach
from spamcraft.reduction import REDUCER_REGISTRY, ProjectionState, get_reducer, reducer_from_state
from spamcraft.transport.session import (BobEndpoint, ModelRegistry, run_eval_session,
                                         run_training_session, serve_sessions)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# argparse dest -> RunConfig field
OVERRIDES = {
    'bits': 'key_bits', 'scale': 'scale', 'eta': 'eta', 'reg_lambda': 'reg_lambda',
    'block_size': 'block_size', 'blind_bound': 'blind_bound', 'margin_bound': 'margin_bound',
    'mode': 'mode', 'rounds': 'rounds', 'passes': 'passes', 'seed': 'seed',
    'reduction': 'reduction', 'reduction_dim': 'reduction_dim', 'df_threshold': 'df_threshold',
    'transport': 'transport', 'corpus': 'corpus', 'labels': 'labels', 'test_corpus': 'test_corpus',
    'workers': 'workers', 'allow_insecure_keys': 'allow_insecure_keys', 'timeout': 'timeout',
}


def build_config(args) -> RunConfig:
    """File values first, then every flag the user actually passed."""
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {field: getattr(args, dest, None) for dest, field in OVERRIDES.items()}
    overrides['address'] = getattr(args, 'listen', None) or getattr(args, 'connect', None)
    return cfg.with_overrides(**overrides)


def _int_list(text):
    return [int(v) for v in text.split(',') if v.strip()]


def _load_dataset(cfg: RunConfig, synthetic=None, corpus=None, labels=None) -> LabeledDataset:
    corpus = corpus or cfg.corpus
    if synthetic:
        n, _, dim = synthetic.lower().partition('x')
        if not dim:
            raise ConfigurationError(f"--synthetic expects NxD, got '{synthetic}'")
        return synthetic_dataset(int(n), int(dim), rng=make_generator(cfg.seed, 'synthetic'))
    if not corpus:
        raise ConfigurationError("no training data: pass --corpus DIR or --synthetic NxD")
    dataset, manifest = ingest_corpus(corpus, labels or cfg.labels, cfg.prefix_limit, cfg.hash_space, cfg.workers)
    print(f"Loaded {manifest.total} documents from {corpus} "
          f"({manifest.counts['spam']} spam, {manifest.counts['ham']} ham)")
    return dataset


def _holdout(cfg: RunConfig, dataset: LabeledDataset, fraction: float):
    """Held-out split: the test corpus when configured, else a seeded random fraction."""
    if cfg.test_corpus:
        test, _ = ingest_corpus(cfg.test_corpus, None, cfg.prefix_limit, cfg.hash_space, cfg.workers)
        return dataset, test
    if not 0 < fraction < 1:
        raise ConfigurationError(f"test fraction must lie in (0, 1), got {fraction}")
    order = make_generator(cfg.seed, 'holdout').permutation(dataset.n)
    cut = max(1, int(round(dataset.n * fraction)))
    return dataset.subset(np.sort(order[cut:])), dataset.subset(np.sort(order[:cut]))


def _reduce(cfg: RunConfig, dataset: LabeledDataset, projection_out=None, require_binary: bool = True):
    """Fit the configured reducer on the training data; returns (reducer, reduced dataset)."""
    if cfg.reduction is None:
        return None, dataset
    reducer = get_reducer(cfg.reduction, dataset.dim, cfg.reduction_dim,
                          seed=seed_for(cfg.seed, f'reduce-{cfg.reduction}') or 0,
                          df_threshold=cfg.df_threshold)
    state = reducer.fit(dataset)
    if require_binary and not reducer.private_safe:
        raise ConfigurationError(f"'{cfg.reduction}' output is not binary; use train-plain or bench for it")
    if projection_out:
        state.save(projection_out)
        print(f"Projection saved to {projection_out}")
    return reducer, reducer.transform(dataset)


def _bob_keys(cfg: RunConfig, path):
    if path:
        keys = load_keypair(path)
        if keys.public.bits != cfg.key_bits:
            print(f"Note: key file holds a {keys.public.bits}-bit key; using it instead of b={cfg.key_bits}")
            cfg = cfg.with_overrides(key_bits=keys.public.bits).validate()
        return keys, cfg
    return keygen(cfg.key_bits, make_random(cfg.seed, 'keygen')), cfg


def cmd_keygen(args) -> int:
    cfg = build_config(args).validate()
    keys = keygen(cfg.key_bits, make_random(cfg.seed, 'keygen'))
    save_keypair(keys, args.output)
    print(f"Wrote {cfg.key_bits}-bit key pair to {args.output}")
    return 0


def cmd_train(args) -> int:
    cfg = build_config(args).validate()
    if cfg.block_size == 1 and cfg.mode == 'online':
        print("Warning: K=1 updates reveal each scaled data vector to the model owner; "
              "the output reveals Alice's data completely.")

    if args.role == 'bob':
        keys, cfg = _bob_keys(cfg, args.keys)
        if args.model_in:
            model = load_model(args.model_in)
        elif args.dim:
            model = Model.zeros(args.dim, cfg.eta, cfg.reg_lambda)
        else:
            raise ConfigurationError("Bob needs --dim D or --model-in FILE")
        registry = ModelRegistry(model)
        results = serve_sessions(BobEndpoint(keys, registry, cfg), max_sessions=args.sessions)
        failures = [r for r in results if isinstance(r, Exception)]
        for failure in failures:
            print(f"Session failed: {failure}")
        save_model(registry.model, args.output)
        print(f"Served {len(results)} session(s); model (version {registry.version}) saved to {args.output}")
        return 1 if failures else 0

    dataset = _load_dataset(cfg, args.synthetic)
    _, dataset = _reduce(cfg, dataset, args.projection_out)
    if args.role == 'alice':
        report = run_training_session(cfg, dataset, role='alice')
        print(f"Contributed {dataset.n} documents over {report.rounds} round(s)")
        print(report.timing.to_string(index=False))
        return 0

    keys, cfg = _bob_keys(cfg, args.keys)
    start = load_model(args.model_in) if args.model_in else None
    report = run_training_session(cfg, dataset, keys=keys, model=start)
    save_model(report.model, args.output)
    print(f"Model saved to {args.output}")
    for key, value in report.summary().items():
        print(f"  {key}: {value}")
    print("\nPer-step wall clock:")
    print(report.timing.to_string(index=False))
    if args.timing_out:
        report.timing.to_csv(args.timing_out, index=False)
        print(f"Timing saved to {args.timing_out}")
    return 0


def cmd_train_plain(args) -> int:
    cfg = build_config(args).validate()
    dataset = _load_dataset(cfg, args.synthetic)
    train, test = _holdout(cfg, dataset, args.test_fraction)
    reducer, train_r = _reduce(cfg, train, require_binary=False)
    test_r = reducer.transform(test) if reducer is not None else test

    if isinstance(train_r, np.ndarray):
        # pca: dense components, no cross-validation
        block = None if cfg.mode == 'batch' else cfg.block_size
        model = train_dense(train_r, train.labels, cfg.eta, cfg.reg_lambda, block,
                            cfg.rounds if cfg.mode == 'batch' else cfg.passes)
        scores = test_r @ model.w
        predictions = np.where(scores > 0, 1, -1)
    else:
        reg_lambda = cfg.reg_lambda
        if args.cv_folds:
            grid = [float(v) for v in args.lambda_grid.split(',')]
            result = cross_validate(train_r, args.cv_folds, grid, seed=seed_for(cfg.seed, 'folds'),
                                    eta=cfg.eta, tol=cfg.tol, max_iters=cfg.max_iters)
            print(result.mean_auc().to_string())
            reg_lambda = result.best_lambda
            print(f"Selected lambda={reg_lambda:g}")

        if cfg.mode == 'batch':
            model = train_batch(train_r, cfg.eta, reg_lambda, tol=cfg.tol, max_iters=cfg.max_iters)
        else:
            blocks = (block for _ in range(cfg.passes) for block in train_r.blocks(cfg.block_size))
            model = train_online(blocks, cfg.eta, reg_lambda, dim=train_r.dim)
        scores = model.scores(test_r)
        predictions = [model.classify(x) for x in test_r.vectors]

    print(f"Trained on {train.n} documents (d={model.dim}, mode={cfg.mode})")
    print(f"  held-out AUC: {auc(scores, test.labels):.5f}")
    print(f"  held-out accuracy: {accuracy(predictions, test.labels):.5f}")
    print(f"  majority baseline: {majority_baseline(test.labels):.5f}")
    if args.output:
        save_model(model, args.output)
        print(f"Model saved to {args.output}")
    return 0


def cmd_eval(args) -> int:
    cfg = build_config(args).validate()
    if args.role == 'bob':
        keys, cfg = _bob_keys(cfg, args.keys)
        endpoint = BobEndpoint(keys, ModelRegistry(load_model(args.model)), cfg)
        results = serve_sessions(endpoint, max_sessions=args.sessions)
        print(f"Served {len(results)} evaluation session(s)")
        return 1 if any(isinstance(r, Exception) for r in results) else 0

    dataset = _load_dataset(cfg, args.synthetic, corpus=cfg.test_corpus or cfg.corpus)
    if args.projection:
        dataset = reducer_from_state(ProjectionState.load(args.projection)).transform(dataset)
    if args.limit:
        dataset = dataset.subset(list(range(min(args.limit, dataset.n))))
    documents = list(dataset.vectors)

    if args.role == 'carol':
        report = run_eval_session(cfg, documents, role='carol')
    else:
        model = load_model(args.model)
        keys, cfg = _bob_keys(cfg, args.keys)
        report = run_eval_session(cfg, documents, keys=keys, model=model)
        agree = np.mean([label == model.classify(x) for label, x in zip(report.labels, documents)])
        print(f"  agreement with plaintext classifier: {agree:.5f}")

    print(f"Classified {len(report.labels)} documents in {report.wall_seconds:.2f}s")
    print(f"  accuracy: {accuracy(report.labels, dataset.labels):.5f}")
    print(f"  majority baseline: {majority_baseline(dataset.labels):.5f}")
    for key, value in sorted(report.counters.items()):
        print(f"  {key}: {value}")
    return 0


def cmd_features(args) -> int:
    cfg = build_config(args)
    dataset = _load_dataset(cfg)
    nnz = [x.nnz for x in dataset.vectors]
    print(f"  feature space: {dataset.dim}")
    print(f"  mean active features per document: {np.mean(nnz) if nnz else 0:.1f}")
    if args.output:
        dump_vectors(dataset, args.output)
        print(f"Vectors written to {args.output}")
    return 0


def cmd_reduce(args) -> int:
    cfg = build_config(args).validate()
    if cfg.reduction is None:
        raise ConfigurationError(f"--reduction is required. Available: {list(REDUCER_REGISTRY.keys())}")
    dataset = _load_dataset(cfg, args.synthetic)
    reducer = get_reducer(cfg.reduction, dataset.dim, cfg.reduction_dim,
                          seed=seed_for(cfg.seed, f'reduce-{cfg.reduction}') or 0,
                          df_threshold=cfg.df_threshold)
    state = reducer.fit(dataset)
    for key, value in reducer.get_info().items():
        print(f"  {key}: {value}")
    state.save(args.output)
    print(f"Projection saved to {args.output}")
    return 0


def cmd_bench(args) -> int:
    cfg = build_config(args).validate()
    dataset = _load_dataset(cfg, args.synthetic)
    train, test = _holdout(cfg, dataset, args.test_fraction)
    methods = [m.strip() for m in args.methods.split(',')]
    dims = _int_list(args.dims) if args.dims else [None]
    cells = expand_grid(methods, dims, _int_list(args.block_sizes) if args.block_sizes else [cfg.block_size],
                        _int_list(args.key_sizes) if args.key_sizes else [cfg.key_bits])

    benchmarker = get_benchmarker(args.benchmarker, config=cfg)
    print(f"Running {len(cells)} cell(s) with {benchmarker.name}")
    frame = benchmarker.run_grid(cells, train, test)
    print(frame.to_string(index=False))

    slowdown = benchmarker.key_size_slowdown(frame)
    if not slowdown.empty and slowdown['b'].nunique() > 1:
        print("\nKey-size slowdown:")
        print(slowdown.to_string(index=False))

    extra = {'argv': ' '.join(sys.argv[1:]), 'train_n': train.n, 'test_n': test.n}
    extra.update({k: v for k, v in vars(args).items() if k != 'func' and v is not None})
    benchmarker.save_results(frame, args.output, extra=extra)
    print(f"Results saved to {args.output}")
    return 1 if (frame['error'] != '').all() else 0


def cmd_inspect_model(args) -> int:
    model = load_model(args.model)
    w = model.w
    print(f"Model: {args.model}")
    print(f"  dimension: {model.dim}")
    print(f"  eta: {model.eta:g}  lambda: {model.reg_lambda:g}")
    print(f"  nonzero weights: {int(np.count_nonzero(w))}")
    print(f"  l2 norm: {np.linalg.norm(w):.6f}")
    print(f"  margin reach: {margin_reach(w):.6f}")
    if model.dim:
        top = np.argsort(-np.abs(w))[:args.top]
        print("  largest weights: " + ", ".join(f"{i}:{w[i]:+.4f}" for i in top))
    if args.corpus:
        cfg = build_config(args)
        dataset = _load_dataset(cfg, corpus=args.corpus)
        if args.projection:
            dataset = reducer_from_state(ProjectionState.load(args.projection)).transform(dataset)
        print(f"  AUC: {auc(model.scores(dataset), dataset.labels):.5f}")
        print(f"  majority baseline: {majority_baseline(dataset.labels):.5f}")
    return 0


def cmd_evaluate(args) -> int:
    from spamcraft.benchmarking.evaluate import evaluate_results
    evaluate_results(args.results, visualize=args.visualize, output_path=args.output)
    return 0


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', '-c', type=str, default=None, help='key=value config file (flags override it)')
    common.add_argument('--bits', '-b', type=int, default=None, help='Paillier key size')
    common.add_argument('--scale', '-C', type=int, default=None, help='Fixed-point scale constant')
    common.add_argument('--eta', type=float, default=None, help='Step size')
    common.add_argument('--lambda', dest='reg_lambda', type=float, default=None, help='l2 coefficient')
    common.add_argument('--block-size', '-K', type=int, default=None, help='Instances per update')
    common.add_argument('--blind-bound', type=float, default=None, help='Additive blind range R')
    common.add_argument('--margin-bound', type=float, default=None, help='Public margin bound M')
    common.add_argument('--mode', choices=['online', 'batch'], default=None, help='Training mode')
    common.add_argument('--rounds', type=int, default=None, help='Batch rounds')
    common.add_argument('--passes', type=int, default=None, help='Online passes over the data')
    common.add_argument('--seed', type=int, default=None, help='Master seed')
    common.add_argument('--reduction', '-r', default=None, help=f'Reduction method {list(REDUCER_REGISTRY.keys())}')
    common.add_argument('--reduction-dim', type=int, default=None, help='Reduced dimension (hash modulus for hashspace)')
    common.add_argument('--df-threshold', type=int, default=None, help='Document-frequency threshold for dfprune')
    common.add_argument('--transport', choices=['inproc', 'socket'], default=None, help='In-process or TCP')
    common.add_argument('--corpus', type=str, default=None, help='Corpus directory with labels.tsv')
    common.add_argument('--labels', type=str, default=None, help='Label file (default: CORPUS/labels.tsv)')
    common.add_argument('--test-corpus', type=str, default=None, help='Held-out corpus directory')
    common.add_argument('--workers', type=int, default=None, help='Threads for extraction and bulk encryption')
    common.add_argument('--timeout', type=float, default=None, help='Socket timeout in seconds')
    common.add_argument('--allow-insecure-keys', action='store_true', default=None,
                        help='Permit keys below 1024 bits')
    common.add_argument('-v', '--verbose', action='store_true', help='Verbose output')
    return common


def main(argv=None):
    common = _common_parser()
    parser = argparse.ArgumentParser(description="spamcraft: privacy-preserving logistic regression for spam filtering")
    subparsers = parser.add_subparsers(dest='command')

    # Keys
    p = subparsers.add_parser('keygen', parents=[common], help='Generate a Paillier key pair')
    p.add_argument('--output', '-o', required=True, help='Key file to write')
    p.set_defaults(func=cmd_keygen)

    # Private training
    p = subparsers.add_parser('train', parents=[common], help='Train privately (Bob and Alice)')
    p.add_argument('--role', choices=['both', 'bob', 'alice'], default='both', help='Which party runs here')
    p.add_argument('--listen', default=None, help='HOST:PORT Bob listens on')
    p.add_argument('--connect', default=None, help='HOST:PORT Alice connects to')
    p.add_argument('--sessions', type=int, default=1, help='Sessions Bob serves before exiting')
    p.add_argument('--keys', default=None, help="Bob's key file (generated from the seed when omitted)")
    p.add_argument('--dim', type=int, default=None, help="Bob's feature dimension when starting from zeros")
    p.add_argument('--model-in', default=None, help='Starting model')
    p.add_argument('--synthetic', default=None, help='Random NxD dataset instead of a corpus')
    p.add_argument('--projection-out', default=None, help='Save the fitted reduction here')
    p.add_argument('--timing-out', default=None, help='Per-step timing CSV')
    p.add_argument('--output', '-o', default='model.bin', help='Model file to write')
    p.set_defaults(func=cmd_train)

    # Plaintext baseline
    p = subparsers.add_parser('train-plain', parents=[common], help='Train the plaintext reference model')
    p.add_argument('--synthetic', default=None, help='Random NxD dataset instead of a corpus')
    p.add_argument('--test-fraction', type=float, default=0.2, help='Held-out fraction without --test-corpus')
    p.add_argument('--cv-folds', type=int, default=0, help='Pick lambda by m-fold cross-validation')
    p.add_argument('--lambda-grid', default='0,0.001,0.01,0.1', help='Comma-separated lambda candidates')
    p.add_argument('--output', '-o', default=None, help='Model file to write')
    p.set_defaults(func=cmd_train_plain)

    # Private evaluation
    p = subparsers.add_parser('eval', parents=[common], help='Classify privately (Bob and Carol)')
    p.add_argument('--role', choices=['both', 'bob', 'carol'], default='both', help='Which party runs here')
    p.add_argument('--listen', default=None, help='HOST:PORT Bob listens on')
    p.add_argument('--connect', default=None, help='HOST:PORT Carol connects to')
    p.add_argument('--sessions', type=int, default=1, help='Sessions Bob serves before exiting')
    p.add_argument('--model', '-m', default='model.bin', help="Bob's model file")
    p.add_argument('--keys', default=None, help="Bob's key file")
    p.add_argument('--projection', default=None, help='Reduction state to apply to the documents')
    p.add_argument('--synthetic', default=None, help='Random NxD documents instead of a corpus')
    p.add_argument('--limit', type=int, default=None, help='Classify only the first N documents')
    p.set_defaults(func=cmd_eval)

    # Feature extraction
    p = subparsers.add_parser('features', parents=[common], help='Extract four-gram vectors from a corpus')
    p.add_argument('--output', '-o', default=None, help='Dump one line of indices per document')
    p.set_defaults(func=cmd_features)

    # Dimensionality reduction
    p = subparsers.add_parser('reduce', parents=[common], help='Fit a reduction and save its state')
    p.add_argument('--synthetic', default=None, help='Random NxD dataset instead of a corpus')
    p.add_argument('--output', '-o', default='projection.json', help='Projection state file')
    p.set_defaults(func=cmd_reduce)

    # Benchmark grid
    p = subparsers.add_parser('bench', parents=[common], help='Run a benchmark grid')
    p.add_argument('--benchmarker', default='protocol', choices=list(BENCHMARKER_REGISTRY.keys()))
    p.add_argument('--methods', default='none', help='Comma-separated reduction methods ("none" for raw features)')
    p.add_argument('--dims', default=None, help='Comma-separated reduced dimensions')
    p.add_argument('--block-sizes', default=None, help='Comma-separated K values')
    p.add_argument('--key-sizes', default=None, help='Comma-separated key sizes')
    p.add_argument('--synthetic', default=None, help='Random NxD dataset instead of a corpus')
    p.add_argument('--test-fraction', type=float, default=0.2, help='Held-out fraction without --test-corpus')
    p.add_argument('--output', '-o', default='results/bench.csv', help='Result CSV')
    p.set_defaults(func=cmd_bench)

    # Model inspection
    p = subparsers.add_parser('inspect-model', parents=[common], help='Show model statistics')
    p.add_argument('model', help='Model file')
    p.add_argument('--top', type=int, default=10, help='Largest weights to list')
    p.add_argument('--projection', default=None, help='Reduction state for --corpus documents')
    p.set_defaults(func=cmd_inspect_model)

    # Result comparison
    p = subparsers.add_parser('evaluate', help='Compare and visualize bench results')
    p.add_argument('--results', '-r', type=str, nargs='+', required=True, help='Path(s) to result CSV file(s)')
    p.add_argument('--visualize', action='store_true', help='Plot the comparison (needs matplotlib)')
    p.add_argument('--output', '-o', type=str, default=None, help='Path to save the summary CSV')
    p.set_defaults(func=cmd_evaluate)

    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 1

    logging.basicConfig(level=logging.DEBUG if getattr(args, 'verbose', False) else logging.INFO,
                        format=LOG_FORMAT)
    try:
        return args.func(args)
    except (SpamcraftError, ValueError, OSError) as e:
        print(f"Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
