"""Command-line interface: train, eval, rules, fewshot, verify, diagnostics.

Every command takes ``--config`` (INI run file) plus ``--seed``, ``--threads``
and ``--output-dir`` overrides, and writes its artifacts with the resolved
configuration embedded. All commands are deterministic under fixed config and
seed.
"""

import argparse
import json
import os
import sys

from . import evaluation, fewshot, model, rules as rules_mod, training, verify
from .config import load_run_config
from .kg import load_graph, write_dictionary

__all__ = ["main", "entry_point"]


class CliError(Exception):
    pass


def _overrides(args):
    return {
        "seed": args.seed,
        "threads": args.threads,
        "output_dir": args.output_dir,
    }


def _load_config(args, need_config=True):
    if args.config is None and need_config:
        raise CliError("a --config file is required for this command")
    return load_run_config(args.config, _overrides(args))


def _load_kg(cfg):
    if cfg.train_path is None:
        raise CliError("config is missing [paths] train")
    for label, p in (("train", cfg.train_path), ("valid", cfg.valid_path), ("test", cfg.test_path)):
        if p is not None and not os.path.exists(p):
            raise CliError(f"{label} triple file not found: {p}")
    return load_graph(cfg.train_path, cfg.valid_path, cfg.test_path)


def _load_rules(cfg, kg, required):
    if cfg.rules_path is None:
        if required:
            raise CliError("rule penalty requested (mu > 0) but no [paths] rules file is set")
        return []
    if not os.path.exists(cfg.rules_path):
        if required:
            raise CliError(f"rules file not found: {cfg.rules_path}")
        return []
    return rules_mod.parse_rules(cfg.rules_path, kg.relation_ids)


def _write_resolved(cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved_config.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg.echo(), fh, indent=2, sort_keys=True)


def cmd_train(args):
    cfg = _load_config(args)
    kg = _load_kg(cfg)
    rules = _load_rules(cfg, kg, required=cfg.train.mu > 0)
    out = cfg.output_dir
    _write_resolved(cfg, out)

    table, records, state = training.train(kg, rules, cfg.train)
    training.save_checkpoint(os.path.join(out, "checkpoint.bin"), table, state)
    training.write_training_log(
        os.path.join(out, "training_log.jsonl"), records, cfg.echo()
    )
    write_dictionary(os.path.join(out, "entities.dict"), kg.entity_names)
    write_dictionary(os.path.join(out, "relations.dict"), kg.relation_names)
    if kg.valid:
        report = evaluation.evaluate(
            table, kg, kg.valid, side=cfg.eval_side, hits=cfg.eval_hits
        )
        evaluation.write_metrics(
            os.path.join(out, "metrics_valid.txt"), report, extra=cfg.echo()
        )
        print(f"validation mrr={report.mrr:.6f} " + " ".join(
            f"hits@{k}={v:.6f}" for k, v in sorted(report.hits_at.items())
        ))
    print(f"checkpoint written to {os.path.join(out, 'checkpoint.bin')}")
    return 0


def cmd_eval(args):
    cfg = _load_config(args)
    kg = _load_kg(cfg)
    table = model.load_table(args.checkpoint)
    split = {"train": kg.train, "valid": kg.valid, "test": kg.test}[
        args.split or cfg.eval_split
    ]
    report = evaluation.evaluate(table, kg, split, side=cfg.eval_side, hits=cfg.eval_hits)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    evaluation.write_metrics(os.path.join(out, "metrics.txt"), report, extra=cfg.echo())
    print(f"mrr={report.mrr:.6f} " + " ".join(
        f"hits@{k}={v:.6f}" for k, v in sorted(report.hits_at.items())
    ) + f" count={report.count}")
    return 0


def cmd_rules_filter(args):
    cfg = _load_config(args)
    kg = _load_kg(cfg)
    parsed = _load_rules(cfg, kg, required=True)
    kept = rules_mod.filter_rules(
        parsed, min_confidence=args.min_confidence, max_length=args.max_length,
        strict=args.strict,
    )
    os.makedirs(cfg.output_dir, exist_ok=True)
    out_path = args.output or os.path.join(cfg.output_dir, "rules_filtered.tsv")
    rules_mod.write_rules(out_path, kept, kg.relation_names)
    print(f"kept {len(kept)} of {len(parsed)} rules -> {out_path}")
    return 0


def cmd_rules_confidence(args):
    cfg = _load_config(args)
    kg = _load_kg(cfg)
    parsed = _load_rules(cfg, kg, required=True)
    names = kg.relation_names
    os.makedirs(cfg.output_dir, exist_ok=True)
    out_path = args.output or os.path.join(cfg.output_dir, "rule_confidence.tsv")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("kind\thead\tbody\tstated\tground\n")
        for rule in parsed:
            ground = rules_mod.ground_confidence(kg, rule)
            body = ",".join(names[r] for r in rule.body)
            ground_txt = "none" if ground is None else f"{ground:.6f}"
            line = f"{rule.kind()}\t{names[rule.head]}\t{body}\t{rule.confidence:g}\t{ground_txt}"
            fh.write(line + "\n")
            print(line)
    return 0


def cmd_fewshot(args):
    cfg = _load_config(args)
    kg = _load_kg(cfg)
    candidates = None
    if cfg.fewshot_candidates is not None:
        try:
            candidates = tuple(kg.relation_ids[name] for name in cfg.fewshot_candidates)
        except KeyError as err:
            raise CliError(f"unknown candidate relation {err.args[0]!r}") from err
    os.makedirs(cfg.output_dir, exist_ok=True)
    _write_resolved(cfg, cfg.output_dir)
    for shots in cfg.fewshot_shots:
        spec = fewshot.FewShotSpec(
            num_task_relations=cfg.fewshot_num_task_relations,
            shots=shots,
            seed=cfg.fewshot_seed,
            candidates=candidates,
        )
        graph, task, supports = fewshot.make_fewshot_split(kg, spec)
        out_dir = os.path.join(cfg.output_dir, f"shots_{shots}")
        fewshot.write_fewshot_split(out_dir, graph, task, supports, spec)
        print(f"shots={shots}: task relations {[kg.relation_names[r] for r in task]} -> {out_dir}")
    return 0


def cmd_verify(args):
    cfg = _load_config(args, need_config=False)
    trials = args.trials or cfg.verify_trials
    seed = cfg.verify_seed if args.seed is None else args.seed
    reports, controls, passed = verify.default_suite(
        trials=trials, seed=seed, dims=cfg.verify_dims, ks=cfg.verify_ks
    )
    informational = [
        verify.counterexample_search_unrestricted(k, cfg.verify_dims[0], trials=trials, seed=seed)
        for k in cfg.verify_ks
    ]
    for report in reports + controls + informational:
        print(verify.format_report(report))
    os.makedirs(cfg.output_dir, exist_ok=True)
    verify.write_reports(
        os.path.join(cfg.output_dir, "theorem_reports.txt"),
        reports + controls + informational,
        extra=cfg.echo(),
    )
    print("suite passed" if passed else "suite FAILED")
    return 0 if passed else 1


def cmd_diagnostics(args):
    cfg = _load_config(args)
    kg = _load_kg(cfg)
    parsed = _load_rules(cfg, kg, required=True)
    table = model.load_table(args.checkpoint)
    diags = evaluation.relation_rule_diagnostics(table, parsed)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    evaluation.write_diagnostics_csv(
        os.path.join(out, "diagnostics.csv"), diags, extra=cfg.echo()
    )
    evaluation.write_diagnostics_summary(
        os.path.join(out, "diagnostics_summary.csv"), diags, extra=cfg.echo()
    )
    model.export_table_csv(
        table, os.path.join(out, "entities.csv"), os.path.join(out, "relations.csv")
    )
    for diag in diags:
        print(
            f"rule {diag.rule_id}: max_delta_re={diag.max_delta_re:.6f} "
            f"mean_sq_delta_im={diag.mean_sq_delta_im:.6f} hinge={diag.hinge_sum:.6f}"
        )
    print(f"mean hinge violation: {evaluation.mean_hinge_violation(diags):.6f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hornplex",
        description="Complex-embedding KG training with Horn-rule injection.",
    )
    parser.add_argument("--config", help="INI run configuration file")
    parser.add_argument("--seed", type=int, help="override every seed in the config")
    parser.add_argument("--threads", type=int, help="cap worker threads")
    parser.add_argument("--output-dir", help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("train", help="train embeddings per the config").set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("eval", help="filtered ranking evaluation of a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--split", choices=("train", "valid", "test"))
    p_eval.set_defaults(fn=cmd_eval)

    p_rules = sub.add_parser("rules", help="rule utilities")
    rules_sub = p_rules.add_subparsers(dest="rules_command", required=True)
    p_filter = rules_sub.add_parser("filter", help="filter rules by confidence and length")
    p_filter.add_argument("--min-confidence", type=float, default=0.5)
    p_filter.add_argument("--max-length", type=int, default=2)
    p_filter.add_argument("--strict", action="store_true",
                          help="use a strict > confidence threshold instead of >=")
    p_filter.add_argument("--output")
    p_filter.set_defaults(fn=cmd_rules_filter)
    p_conf = rules_sub.add_parser("confidence", help="exact grounded confidence of each rule")
    p_conf.add_argument("--output")
    p_conf.set_defaults(fn=cmd_rules_confidence)

    sub.add_parser("fewshot", help="construct zero/few-shot splits").set_defaults(fn=cmd_fewshot)

    p_verify = sub.add_parser("verify", help="run the theorem verification suite")
    p_verify.add_argument("--trials", type=int)
    p_verify.set_defaults(fn=cmd_verify)

    p_diag = sub.add_parser("diagnostics", help="rule-constraint gaps of a checkpoint")
    p_diag.add_argument("--checkpoint", required=True)
    p_diag.set_defaults(fn=cmd_diagnostics)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
