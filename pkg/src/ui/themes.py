"""
Retro color themes for plots and console tables
"""

from typing import Dict, List

from src.utils.errors import UserInputError

PALETTES: Dict[str, Dict[str, object]] = {
    "green_on_black": {
        "default": "#33ff33",
        "highlight": "#ffff55",
        "status": "#55ffff",
        "background": "#000000",
        "grid": "#1a4d1a",
        "clusters": ["#33ff33", "#ffff55", "#55ffff", "#ff55ff", "#ff5555", "#5555ff",
                     "#aaaaaa", "#ffaa00", "#00aa00", "#00aaaa", "#aa00aa", "#aa5500"],
        "rich": "green",
    },
    "amber": {
        "default": "#ffb000",
        "highlight": "#ffffff",
        "status": "#ffcc66",
        "background": "#000000",
        "grid": "#4d3500",
        "clusters": ["#ffb000", "#ffffff", "#ff8000", "#ffd966", "#cc6600", "#fff2cc",
                     "#b37700", "#ffe0a3", "#804000", "#ffcc00", "#e69500", "#999999"],
        "rich": "yellow",
    },
    "dos_blue": {
        "default": "#ffffff",
        "highlight": "#ffff55",
        "status": "#55ffff",
        "background": "#0000aa",
        "grid": "#3333bb",
        "clusters": ["#ffffff", "#ffff55", "#55ffff", "#55ff55", "#ff55ff", "#ff5555",
                     "#aaaaaa", "#ffaa00", "#00ffaa", "#aaaaff", "#ffaaaa", "#aaffaa"],
        "rich": "bright_white on blue",
    },
}


class ThemeManager:
    """Manages color themes for plots and tables"""

    def __init__(self, theme_name: str = "green_on_black"):
        self.theme_name = theme_name
        self.colors: Dict[str, object] = {}

    def initialize_colors(self):
        if self.theme_name not in PALETTES:
            raise UserInputError(f"unknown theme {self.theme_name!r}; choose one of {', '.join(PALETTES)}")
        self.colors = dict(PALETTES[self.theme_name])
        return self

    def get_color(self, name: str) -> str:
        if not self.colors:
            self.initialize_colors()
        return self.colors.get(name, self.colors["default"])

    def cluster_colors(self, n: int) -> List[str]:
        """One color per cluster id, cycling when there are more clusters than colors"""
        palette = self.get_color("clusters")
        return [palette[i % len(palette)] for i in range(n)]

    @property
    def rich_style(self) -> str:
        return self.get_color("rich")
