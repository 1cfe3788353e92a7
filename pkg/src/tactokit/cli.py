"""tactokit command line: patterns, cues, rendering, playback, simulation,
log analysis, and the experiment service."""

from __future__ import annotations

from pathlib import Path

import click

from . import analysis as an
from .cues import Method, assign_cues
from .device import VirtualSink, WavFileSink, SerialSink, play as device_play
from .patterns import (
    Corner,
    PatternError,
    ReferenceFrame,
    TimingParams,
    enumerate_three_point_strokes,
    load_pattern_set,
    pattern_duration,
    shipped_pattern_set,
)
from .simulate import (
    ConfusionKernel,
    exact_confusion,
    load_kernel,
    monte_carlo_confusion,
)
from .synth import RenderParams, compile_schedule, export_wav, render_pattern


def _resolve_set(name: str):
    if name.endswith(".txt") or "/" in name:
        return load_pattern_set(name)
    return shipped_pattern_set(name)


def _resolve_pattern(pset, label: str):
    try:
        return pset.get(label)
    except KeyError:
        try:
            return pset.get(label.lower())
        except KeyError:
            raise click.ClickException(
                f"pattern {label!r} not in set {pset.name!r}"
            ) from None


@click.group()
def main():
    """Spatiotemporal tactile pattern toolkit for a 2x2 wrist tactor array."""


# --- patterns ---------------------------------------------------------------


@main.group()
def patterns():
    """Inspect and validate pattern sets."""


@patterns.command("list")
@click.option("--set", "set_name", default="edgewrite_alnum", show_default=True)
@click.option("--isi", type=float, default=0.0, show_default=True)
@click.option("--burst", type=float, default=0.5, show_default=True)
def patterns_list(set_name, isi, burst):
    pset = _resolve_set(set_name)
    timing = TimingParams(burst_s=burst, isi_s=isi)
    click.echo(f"# {pset.name} v{pset.version}: {len(pset)} patterns")
    for p in pset:
        corners = " ".join(c.name for c in p.corners)
        tags = " ".join(sorted(p.tags))
        click.echo(
            f"{p.label:>8}  {corners:<20} {pattern_duration(p, timing):.1f}s  {tags}"
        )


@patterns.command("validate")
@click.argument("path", type=click.Path(exists=True))
def patterns_validate(path):
    try:
        pset = load_pattern_set(path)
    except PatternError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(f"ok: {pset.name} v{pset.version}, {len(pset)} patterns")


@patterns.command("enumerate-tps")
def patterns_enumerate_tps():
    for p in enumerate_three_point_strokes():
        click.echo(f"{p.label}: {' '.join(c.name for c in p.corners)}")


# --- cues -------------------------------------------------------------------


@main.group()
def cues():
    """Per-tactor cue assignment."""


@cues.command("show")
@click.option("--method", "method_name", default="4-hetero", show_default=True)
def cues_show(method_name):
    cmap = assign_cues(Method.parse(method_name))
    click.echo("corner  carrier_hz  rough  mod_hz  level  nominal_volts")
    for corner in Corner:
        cue = cmap.cue(corner)
        mod = f"{cue.mod_hz:g}" if cue.rough else "-"
        click.echo(
            f"{corner.name:<7} {cue.carrier_hz:<11g} {str(cue.rough):<6} "
            f"{mod:<7} {cue.drive_level:<6g} {cue.nominal_volts or '-'}"
        )


# --- render / play ----------------------------------------------------------


def _common_cue_map(method_name: str):
    return assign_cues(Method.parse(method_name))


@main.command()
@click.option("--pattern", "label", required=True)
@click.option("--set", "set_name", default="edgewrite_alnum", show_default=True)
@click.option("--method", "method_name", default="baseline", show_default=True)
@click.option("--rf", default="RF1", show_default=True)
@click.option("--isi", type=float, default=0.0, show_default=True)
@click.option("--burst", type=float, default=0.5, show_default=True)
@click.option("--rate", type=int, default=48000, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="output wav path")
@click.option("--emit", type=click.Path(), default=None, help="schedule JSONL path")
def render(label, set_name, method_name, rf, isi, burst, rate, out, emit):
    """Render one pattern to a 4-channel wav (and optionally its schedule)."""
    pset = _resolve_set(set_name)
    pattern = _resolve_pattern(pset, label)
    cmap = _common_cue_map(method_name)
    frame = ReferenceFrame[rf]
    timing = TimingParams(burst_s=burst, isi_s=isi)
    buf = render_pattern(pattern, cmap, frame, timing, RenderParams(sample_rate_hz=rate))
    export_wav(buf, out)
    click.echo(f"wrote {out}: {buf.channels} ch x {buf.samples_per_channel} samples")
    if emit:
        compile_schedule(pattern, cmap, frame, timing).write_jsonl(emit)
        click.echo(f"wrote {emit}")


@main.command("play")
@click.option("--pattern", "label", required=True)
@click.option("--set", "set_name", default="edgewrite_alnum", show_default=True)
@click.option("--method", "method_name", default="baseline", show_default=True)
@click.option("--rf", default="RF1", show_default=True)
@click.option("--isi", type=float, default=0.0, show_default=True)
@click.option("--port", default=None, help="serial device; default: virtual sink")
@click.option("--wav", type=click.Path(), default=None, help="play into a wav file")
def play_cmd(label, set_name, method_name, rf, isi, port, wav):
    """Play one pattern's schedule to a sink (serial, wav, or virtual)."""
    pset = _resolve_set(set_name)
    pattern = _resolve_pattern(pset, label)
    schedule = compile_schedule(
        pattern,
        _common_cue_map(method_name),
        ReferenceFrame[rf],
        TimingParams(burst_s=0.5, isi_s=isi),
    )
    if port:
        sink = SerialSink(port)
    elif wav:
        sink = WavFileSink(wav)
    else:
        sink = VirtualSink()
    try:
        report = device_play(schedule, sink)
    finally:
        sink.close()
    click.echo(
        f"{report.n_events} events, max |lateness| = {report.max_abs_lateness_ms:.2f} ms, "
        f"overruns: {len(report.overruns)}"
    )


# --- simulate ---------------------------------------------------------------


@main.command()
@click.option("--set", "set_name", default="tps24", show_default=True)
@click.option("--method", "method_name", default="baseline", show_default=True)
@click.option("--kernel", "kernel_path", type=click.Path(exists=True), default=None)
@click.option("--exact", "mode_exact", is_flag=True, default=False)
@click.option("--mc", "n_trials", type=int, default=None, help="Monte Carlo trials per stimulus")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="confusion CSV path")
def simulate(set_name, method_name, kernel_path, mode_exact, n_trials, seed, out):
    """Predict a confusion matrix under the tactor-confusion model."""
    if mode_exact == (n_trials is not None):
        raise click.ClickException("choose exactly one of --exact / --mc N")
    pset = _resolve_set(set_name)
    cmap = _common_cue_map(method_name)
    kernel = load_kernel(kernel_path) if kernel_path else ConfusionKernel()
    if mode_exact:
        predicted = exact_confusion(pset, cmap, kernel)
    else:
        predicted = monte_carlo_confusion(pset, cmap, kernel, n_trials, seed)
    click.echo(f"predicted accuracy: {100 * predicted.accuracy:.1f}%")
    if out:
        predicted.save_csv(out)
        click.echo(f"wrote {out}")


# --- analyze ----------------------------------------------------------------


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--by", default="posture,method", show_default=True,
              help="comma-separated condition fields")
@click.option("--out", type=click.Path(), default=None, help="report CSV path")
@click.option("--confusion-dir", type=click.Path(), default=None)
@click.option("--pooled-it", is_flag=True, default=False,
              help="compute AC/IT from pooled matrices instead of per-participant means")
@click.option("--phase", default="testing", show_default=True,
              help="phase filter; 'all' disables")
def analyze(log_path, by, out, confusion_dir, pooled_it, phase):
    """Summarize a JSONL trial log: accuracy, IT, reaction times."""
    records = an.read_log(log_path)
    if phase != "all":
        records = [r for r in records if r.phase == phase]
    if not records:
        raise click.ClickException("no records selected")
    fields = [f.strip() for f in by.split(",") if f.strip()]
    reports = an.condition_report(records, fields, pooled_it=pooled_it)
    header = "  ".join(f"{f}" for f in fields)
    click.echo(f"{header}  n  AC%  IT(bits)  RT(s)")
    for r in reports:
        cond = "  ".join(r.condition)
        click.echo(
            f"{cond}  {r.n_trials}  {100 * r.accuracy:.1f}  {r.it_bits:.2f}  "
            f"{r.rt_mean_s:.1f}"
        )
    if out:
        an.write_report_csv(reports, fields, out)
        click.echo(f"wrote {out}")
    if confusion_dir:
        cdir = Path(confusion_dir)
        cdir.mkdir(parents=True, exist_ok=True)
        groups: dict[tuple[str, ...], list] = {}
        for r in records:
            groups.setdefault(tuple(getattr(r, f) for f in fields), []).append(r)
        for cond, recs in sorted(groups.items()):
            cm = an.build_confusion(recs)
            name = "_".join(cond) or "all"
            cm.save_csv(cdir / f"confusion_{name}.csv")
        click.echo(f"wrote {len(groups)} confusion matrices to {cdir}")


# --- serve ------------------------------------------------------------------


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--port", type=int, default=None, help="override the config port")
def serve(config_path, port):
    """Run the experiment session service from a TOML config."""
    from .service import serve_from_config

    serve_from_config(config_path, port)


if __name__ == "__main__":
    main()
