"""Command-line interface using Typer and Rich.

Mining and ranking are separate commands: ``mine`` writes a pattern stream,
``rank`` fits the background model and scores a stream. ``embed``, ``recover``
and ``scale`` drive the planted-pattern and scalability protocols, and
``stats`` summarises a dataset.

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
"""

import json
import logging
import statistics
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click
import typer
from rich.console import Console
from rich.table import Table

from src.config import configure_logging, get_settings
from src.exceptions import MccsError
from src.graph import KPartiteGraph, build_graph
from src.maxent import database_density, fit
from src.miner import MinerOptions, mine
from src.models import StatsRecord
from src.schema import ingest, load_schema, write_dataset
from src.score import RankedPattern, RankOptions, rank
from src.storage import (
    dump_model,
    nodes_by_type,
    read_patterns,
    write_patterns,
    write_ranked,
)
from src.synth import EmbedSpec, embed, random_graph, recovery_run, scaling_run

# Initialize Rich consoles
console = Console()
err_console = Console(stderr=True)

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="mccs",
    help="Mine and rank maximal connected complete subgraphs of relational data.",
    add_completion=False,
    no_args_is_help=True,
)

EXIT_USAGE = 1
EXIT_DATA = 2


@contextmanager
def data_errors() -> Iterator[None]:
    """Turn library and I/O failures into a printed message and exit status 2."""
    try:
        yield
    except MccsError as e:
        err_console.print(f"[red]✗ Error:[/] {e}")
        raise typer.Exit(code=EXIT_DATA) from e
    except OSError as e:
        err_console.print(f"[red]✗ Error:[/] {e}")
        raise typer.Exit(code=EXIT_DATA) from e


def load_graph(schema_path: Path) -> KPartiteGraph:
    """Parse a descriptor, ingest its files and build the graph."""
    schema = load_schema(schema_path)
    return build_graph(ingest(schema, base_dir=schema_path.parent))


def stats(graph: KPartiteGraph) -> StatsRecord:
    """Node, edge and density summary of a graph."""
    try:
        density = database_density(graph)
    except MccsError:
        density = 0.0
    return StatsRecord(
        nodes_per_type={
            name: len(labels)
            for name, labels in zip(graph.entity_types, graph.partitions, strict=True)
        },
        edges_per_type={et.name: len(graph.edges(et.name)) for et in graph.edge_types},
        total_nodes=graph.node_count,
        total_edges=graph.edge_count,
        density=density,
    )


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise typer.BadParameter(
            f"expected comma-separated integers, got '{text}'"
        ) from e


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise typer.BadParameter(
            f"expected comma-separated numbers, got '{text}'"
        ) from e


def _star_graph(sizes: list[int], density: float, seed: int) -> KPartiteGraph:
    """Random graph whose first type is linked to every other type."""
    if len(sizes) < 2:
        raise typer.BadParameter("at least two type sizes are required")
    topology = [(0, t) for t in range(1, len(sizes))]
    return random_graph(sizes, topology, density, seed=seed)


def show_ranked(graph: KPartiteGraph, ranked: list[RankedPattern], limit: int) -> None:
    """Display the top patterns in a Rich Table."""
    table = Table(
        title="Top patterns",
        show_header=True,
        header_style="bold magenta",
        border_style="blue",
    )
    table.add_column("Rank", style="cyan", justify="right")
    table.add_column("Score", justify="right")
    table.add_column("SI (bits)", justify="right")
    table.add_column("DL (bits)", justify="right")
    table.add_column("Nodes", style="white")
    for item in ranked[:limit]:
        grouped = nodes_by_type(graph, item.pattern)
        nodes = "; ".join(
            f"{name}: {', '.join(labels)}" for name, labels in grouped.items()
        )
        table.add_row(
            str(item.rank),
            f"{item.interestingness:.4f}",
            f"{item.self_information_bits:.2f}",
            f"{item.description_length_bits:.2f}",
            nodes,
        )
    console.print(table)


@app.callback()
def callback(
    verbose: int = typer.Option(
        0, "--verbose", "-v", count=True, help="Log INFO (-v) or DEBUG (-vv)."
    ),
) -> None:
    """Mine and rank maximal connected complete subgraphs."""
    if verbose >= 2:
        level: str = "DEBUG"
    elif verbose == 1:
        level = "INFO"
    else:
        level = get_settings().log_level
    configure_logging(level)


@app.command("mine")
def mine_command(
    schema: Path = typer.Option(..., "--schema", help="Schema descriptor (JSON)."),
    out: Path = typer.Option(..., "--out", help="Pattern stream to write."),
    all_ccs: bool = typer.Option(False, "--all-ccs", help="Emit every CCS."),
    min_nodes: int | None = typer.Option(None, "--min-nodes", min=1),
    require_all_types: bool = typer.Option(
        False, "--require-all-types", help="Keep patterns covering every entity type."
    ),
    no_prune: bool = typer.Option(
        False, "--no-prune", help="Disable subsumption pruning."
    ),
    threads: int | None = typer.Option(None, "--threads", min=1),
    dump_graph: Path | None = typer.Option(
        None, "--dump-graph", help="Write edges as JSON lines."
    ),
) -> None:
    """Write every (maximal) connected complete subgraph as JSON lines."""
    settings = get_settings()
    with data_errors():
        graph = load_graph(schema)
        options = MinerOptions(
            maximal_only=not all_ccs,
            min_nodes=min_nodes or settings.min_nodes,
            require_all_types=require_all_types,
            prune=not no_prune,
        )
        if dump_graph is not None:
            with dump_graph.open("w", encoding="utf-8") as handle:
                graph.dump(handle)
        with out.open("w", encoding="utf-8") as handle:
            count = write_patterns(
                graph, mine(graph, options, threads=threads or settings.threads), handle
            )
    console.print(f"[green]✓[/] {count} patterns written to {out}")


@app.command("rank")
def rank_command(
    schema: Path = typer.Option(..., "--schema", help="Schema descriptor (JSON)."),
    patterns: Path = typer.Option(..., "--patterns", help="Pattern stream to score."),
    out: Path = typer.Option(..., "--out", help="Ranked output to write."),
    p: float | None = typer.Option(
        None, "--p", help="Membership probability (default: database density)."
    ),
    top: int | None = typer.Option(None, "--top", min=1, help="Keep the best N."),
    show: int = typer.Option(0, "--show", min=0, help="Print the best N patterns."),
    threads: int | None = typer.Option(None, "--threads", min=1),
    dump: Path | None = typer.Option(
        None, "--dump-model", help="Write the fitted model."
    ),
) -> None:
    """Fit the background model and rank a pattern stream."""
    if p is not None and not 0.0 < p < 1.0:
        raise typer.BadParameter("must lie strictly between 0 and 1", param_hint="--p")
    settings = get_settings()
    with data_errors():
        graph = load_graph(schema)
        with patterns.open(encoding="utf-8") as handle:
            found = read_patterns(graph, handle)
        model = fit(
            graph,
            tolerance=settings.tolerance,
            max_iterations=settings.max_iterations,
            threads=threads or settings.threads,
        )
        if dump is not None:
            with dump.open("w", encoding="utf-8") as handle:
                dump_model(model, handle)
        ranked = rank(model, graph, found, RankOptions(p=p, top_k=top))
        with out.open("w", encoding="utf-8") as handle:
            write_ranked(graph, ranked, handle, digits=settings.float_digits)
    if show:
        show_ranked(graph, ranked, show)
    console.print(f"[green]✓[/] {len(ranked)} ranked patterns written to {out}")


@app.command("embed")
def embed_command(
    schema: Path = typer.Option(..., "--schema", help="Schema descriptor (JSON)."),
    k: int = typer.Option(..., "--k", min=1, help="New nodes per selected type."),
    hub: str = typer.Option(..., "--hub", help="Hub entity type."),
    satellites: str = typer.Option(..., "--satellites", help="Comma-separated types."),
    seed: int = typer.Option(0, "--seed"),
    out_dir: Path = typer.Option(
        ..., "--out-dir", help="Directory for the new dataset."
    ),
) -> None:
    """Plant a pattern and write the augmented dataset plus ground truth."""
    with data_errors():
        graph = load_graph(schema)
        spec = EmbedSpec(
            k=k,
            hub_type=hub,
            satellite_types=tuple(
                s.strip() for s in satellites.split(",") if s.strip()
            ),
            seed=seed,
        )
        augmented, truth = embed(graph, spec)
        schema_path = write_dataset(augmented.to_database(), out_dir)
        truth_path = out_dir / "ground_truth.json"
        truth_path.write_text(
            json.dumps(truth.to_record(), indent=2) + "\n", encoding="utf-8"
        )
    console.print(f"[green]✓[/] Augmented dataset written to {schema_path}")
    console.print(f"[green]✓[/] Ground truth written to {truth_path}")


@app.command("stats")
def stats_command(
    schema: Path = typer.Option(..., "--schema", help="Schema descriptor (JSON)."),
    as_json: bool = typer.Option(
        False, "--json", help="Print JSON instead of a table."
    ),
) -> None:
    """Print node, edge and density counts."""
    with data_errors():
        record = stats(load_graph(schema))
    if as_json:
        typer.echo(record.model_dump_json(indent=2))
        return

    table = Table(title="Dataset", show_header=True, header_style="bold magenta")
    table.add_column("Item", style="cyan")
    table.add_column("Count", justify="right")
    for name, count in record.nodes_per_type.items():
        table.add_row(f"nodes: {name}", str(count))
    for name, count in record.edges_per_type.items():
        table.add_row(f"edges: {name}", str(count))
    table.add_row("[bold]total nodes[/]", str(record.total_nodes))
    table.add_row("[bold]total edges[/]", str(record.total_edges))
    table.add_row("[bold]density[/]", f"{record.density:.6g}")
    console.print(table)


@app.command("recover")
def recover_command(
    sizes: str = typer.Option("200,50,30", "--sizes", help="Hub size first."),
    density: float = typer.Option(0.05, "--density", min=0.0, max=1.0),
    k: str = typer.Option("2,3,4,6", "--k", help="Comma-separated pattern sizes."),
    seeds: int = typer.Option(20, "--seeds", min=1),
    base_seed: int = typer.Option(0, "--base-seed"),
    threads: int | None = typer.Option(None, "--threads", min=1),
) -> None:
    """Plant patterns in a random graph and report their ranks."""
    settings = get_settings()
    size_list = _int_list(sizes)
    k_list = _int_list(k)
    with data_errors():
        graph = _star_graph(size_list, density, base_seed)
        names = graph.entity_types
        table = Table(title="Rank of planted pattern", header_style="bold magenta")
        table.add_column("k", style="cyan", justify="right")
        table.add_column("Median rank", justify="right")
        table.add_column("Rank 1", justify="right")
        table.add_column("Ranks")
        for size in k_list:
            results = [
                recovery_run(
                    graph,
                    EmbedSpec(size, names[0], tuple(names[1:]), seed=base_seed + s),
                    threads=threads or settings.threads,
                )
                for s in range(seeds)
            ]
            ranks = [
                r.rank if r.rank is not None else graph.node_count for r in results
            ]
            firsts = sum(1 for r in results if r.rank == 1)
            table.add_row(
                str(size),
                f"{statistics.median(ranks):g}",
                f"{firsts}/{seeds}",
                ", ".join(str(r.rank) if r.rank is not None else "-" for r in results),
            )
    console.print(table)


@app.command("scale")
def scale_command(
    sizes: str = typer.Option("20000,6000,4000", "--sizes", help="Hub size first."),
    density: float = typer.Option(0.0005, "--density", min=0.0, max=1.0),
    fractions: str = typer.Option("0.2,0.4,0.6,0.8,1.0", "--fractions"),
    seed: int = typer.Option(0, "--seed"),
    threads: int | None = typer.Option(None, "--threads", min=1),
) -> None:
    """Mine nested samples of a random graph and report the time trend."""
    settings = get_settings()
    with data_errors():
        graph = _star_graph(_int_list(sizes), density, seed)
        points, exponent = scaling_run(
            graph,
            graph.entity_types[0],
            _float_list(fractions),
            seed=seed,
            threads=threads or settings.threads,
        )
    table = Table(title="Scalability", header_style="bold magenta")
    for column in ("Sample", "Nodes", "Edges", "Patterns", "Seconds"):
        table.add_column(column, justify="right")
    for point in points:
        table.add_row(
            f"{point.fraction:.0%}",
            str(point.nodes),
            str(point.edges),
            str(point.patterns),
            f"{point.seconds:.2f}",
        )
    console.print(table)
    console.print(f"[bold]Log-log time exponent:[/] {exponent:.3f}")


def run(argv: list[str]) -> int:
    """Run the CLI on an argument list and return the exit status."""
    command = typer.main.get_command(app)
    try:
        result = command.main(args=argv, prog_name="mccs", standalone_mode=False)
    except click.exceptions.Abort:
        err_console.print("[red]Aborted[/]")
        return EXIT_USAGE
    except click.ClickException as e:
        err_console.print(f"[red]✗ Usage error:[/] {e.format_message()}")
        return EXIT_USAGE
    return result if isinstance(result, int) else 0
