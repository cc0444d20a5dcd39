"""
Command-line interface for NarrativeMap
"""

import functools
import logging
import os
import sys
from typing import Optional, Tuple

import click

from src import __version__
from src.core.synthetic import write_fixture
from src.pipeline import NarrativePipeline
from src.utils.config import ConfigManager
from src.utils.errors import UserInputError
from src.utils.logger import setup_logging

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2

logger = logging.getLogger("NarrativeMap")


class NarrativeMapGroup(click.Group):
    """click group whose usage errors exit with the user-error code"""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            result = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USER_ERROR)
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USER_ERROR)
        if not standalone_mode:
            return result
        sys.exit(result if isinstance(result, int) else EXIT_OK)


def common_options(command):
    """--config, --out and --seed on every command"""
    command = click.option("--seed", type=int, default=None, help="Override the configured random seed.")(command)
    command = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                           help="Output directory (default: output_dir from the config).")(command)
    command = click.option("--config", "config_path", type=click.Path(dir_okay=False), default="config.json",
                           show_default=True, help="JSON or TOML config file.")(command)
    return command


def handle_errors(command):
    """Map user errors to exit code 1 and everything else to exit code 2"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except UserInputError as e:
            logger.error(str(e))
            click.echo(f"Error: {e}", err=True)
            raise SystemExit(EXIT_USER_ERROR)
        except Exception as e:
            logger.exception(f"Internal error: {e}")
            click.echo(f"Internal error: {e}", err=True)
            raise SystemExit(EXIT_INTERNAL_ERROR)

    return wrapper


def make_pipeline(config_path: str, out_dir: Optional[str], seed: Optional[int]) -> NarrativePipeline:
    manager = ConfigManager(config_path)
    manager.load_config()
    run = manager.to_run_config(output_dir=out_dir, seed=seed)
    os.makedirs(run.output_dir, exist_ok=True)
    setup_logging(os.path.join(run.output_dir, "narrativemap.log"))
    return NarrativePipeline(run)


@click.group(cls=NarrativeMapGroup)
@click.version_option(__version__, prog_name="NarrativeMap")
def cli():
    """Narrative-structured embeddings of news articles, from actant extraction to cluster reports."""


def _simple_command(name: str, help_text: str):
    @cli.command(name=name, help=help_text)
    @common_options
    @handle_errors
    def command(config_path, out_dir, seed):
        getattr(make_pipeline(config_path, out_dir, seed), name)()

    return command


ingest = _simple_command("ingest", "Load the corpus and keep articles matching the keywords.")
extract = _simple_command("extract", "Extract the six actants of every article with the chat model.")
embed = _simple_command("embed", "Embed every primary actor.")
build = _simple_command("build", "Fit per-role SVD reducers and build the narrative embeddings.")
project = _simple_command("project", "Project the narrative embeddings with UMAP.")
cluster = _simple_command("cluster", "Ward-cluster the projection and choose k by silhouette.")
baseline = _simple_command("baseline", "Cluster whole-article embeddings and compare with the narrative clusters.")
dimstudy = _simple_command("dimstudy", "Average similarity of pooled actant vectors after SVD, PCA and UMAP.")


@cli.command()
@common_options
@click.option("--drop", "drops", type=int, multiple=True, help="Exclude a cluster from the reports.")
@click.option("--merge", "merges", type=(int, int), multiple=True, help="Merge two clusters into the smaller id.")
@handle_errors
def post(config_path, out_dir, seed, drops: Tuple[int, ...], merges: Tuple[Tuple[int, int], ...]):
    """Drop or merge clusters; config post_ops are replayed first, all ids refer to the clusters they produce."""
    make_pipeline(config_path, out_dir, seed).post(drops=drops, merges=merges)


@cli.command()
@common_options
@click.option("--publish", "publish_uri", default=None, help="Upload the reports to s3://bucket/prefix.")
@handle_errors
def report(config_path, out_dir, seed, publish_uri):
    """Write label, actor, syncretism, source and timeline reports plus SVG plots."""
    make_pipeline(config_path, out_dir, seed).report(publish_uri=publish_uri)


@cli.command()
@common_options
@click.option("--n", "n_articles", type=int, default=60, show_default=True, help="Number of articles.")
@handle_errors
def fixture(config_path, out_dir, seed, n_articles):
    """Write the synthetic corpus, canned chat answers and an offline config."""
    target = out_dir or "fixture"
    setup_logging()
    paths = write_fixture(target, n=n_articles, seed=seed or 0)
    click.echo(f"Fixture written; run commands with --config {paths['config']}")


def main():
    """Main entry point"""
    cli(prog_name="NarrativeMap")


if __name__ == "__main__":
    main()
