"""
Rich console tables for stage summaries
"""

from typing import Dict, Mapping, Optional, Sequence

from rich.console import Console
from rich.table import Table

from src.operations.analysis import ClusterLabelSpec
from src.operations.dim_study import DimStudyResult
from src.ui.themes import ThemeManager


class ConsoleReporter:
    """Prints stage results as tables; silent when quiet"""

    def __init__(self, theme: Optional[ThemeManager] = None, console: Optional[Console] = None, quiet: bool = False):
        self.theme = theme or ThemeManager().initialize_colors()
        self.console = console or Console()
        self.quiet = quiet

    def _print(self, table: Table) -> None:
        if not self.quiet:
            self.console.print(table)

    def summary(self, title: str, values: Mapping[str, object]) -> None:
        table = Table(title=title, header_style=self.theme.rich_style)
        table.add_column("Item")
        table.add_column("Value", justify="right")
        for key, value in values.items():
            table.add_row(str(key), str(value))
        self._print(table)

    def k_scores(self, scores: Mapping[int, float], chosen: int) -> None:
        table = Table(title="Silhouette by k", header_style=self.theme.rich_style)
        table.add_column("k", justify="right")
        table.add_column("silhouette", justify="right")
        for k, score in sorted(scores.items()):
            marker = " *" if k == chosen else ""
            table.add_row(f"{k}{marker}", f"{score:.4f}")
        self._print(table)

    def cluster_labels(self, labels: Sequence[ClusterLabelSpec], sizes: Dict[int, int]) -> None:
        table = Table(title="Cluster labels", header_style=self.theme.rich_style)
        table.add_column("cluster", justify="right")
        table.add_column("articles", justify="right")
        table.add_column("label")
        for label in labels:
            table.add_row(str(label.cluster_id), str(sizes.get(label.cluster_id, 0)), str(label))
        self._print(table)

    def dim_study(self, result: DimStudyResult) -> None:
        table = Table(title=f"Average similarity (full dimension {result.baseline:.4f})",
                      header_style=self.theme.rich_style)
        table.add_column("method")
        for dim in result.dims:
            table.add_column(str(dim), justify="right")
        for method in result.methods:
            cells = [result.get(method, dim) for dim in result.dims]
            table.add_row(method, *("-" if v is None else f"{v:.3f}" for v in cells))
        self._print(table)
