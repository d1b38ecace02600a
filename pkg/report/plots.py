import matplotlib

matplotlib.use('Agg')  # file output only, no display needed

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402
from loguru import logger  # noqa: E402


def plot_correlation_matrix(matrix: pd.DataFrame, path) -> None:
    """Heatmap of absolute pairwise correlations, darker cells are more strongly correlated"""
    size = max(6, 0.35 * len(matrix.columns))
    fig, ax = plt.subplots(figsize=(size, size))
    sns.heatmap(matrix.abs(), vmin=0, vmax=1, cmap='Greys', square=True, cbar_kws={'label': '|correlation|'}, ax=ax)
    ax.set_title('Feature correlation')
    plt.savefig(path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info(f'Correlation heatmap written to {path}')
