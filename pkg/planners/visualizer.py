import base64
import logging
from io import BytesIO

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from config import VIZ_CONFIG  # noqa: E402

logger = logging.getLogger(__name__)


class Visualizer:
    def __init__(self):
        self.figures = {}
        self.base64_images = {}

    def create_storage_timeline(self, evolution, title='', figsize=None):
        """磁盘占用按实验堆叠，下方为累计归档"""
        figsize = figsize or VIZ_CONFIG['figsize_timeline']
        fig, axes = plt.subplots(2, 1, figsize=figsize, sharex=True)

        by_experiment = evolution.by_experiment
        years = np.asarray(by_experiment.index, dtype=int)
        if by_experiment.shape[1]:
            axes[0].stackplot(years, by_experiment.to_numpy().T, labels=list(by_experiment.columns), alpha=0.85)
            axes[0].legend(loc='upper left', fontsize='small')
        axes[0].set_ylabel('Disk [PB]')
        axes[0].set_title(f'{title} disk usage (saturation {evolution.saturation.pb:.0f} PB)')

        archive_pb = evolution.archive.stacked / 1e15
        axes[1].plot(np.asarray(archive_pb.index, dtype=int), archive_pb.to_numpy(), marker='o')
        axes[1].set_ylabel('Archive [PB]')
        axes[1].set_xlabel('Year')
        axes[1].set_title(f'Cumulative archive (slope {evolution.archive_slope_pb_per_year:.1f} PB/year)')
        for ax in axes:
            ax.grid(True, alpha=0.3)

        plt.tight_layout()
        self._save_figure_as_base64(fig, f'storage_timeline_{title}'.rstrip('_'))
        return self

    def create_online_profile(self, profile, tier0=None, title='', figsize=None):
        """年内逐日在线需求，可选叠加 Tier0 最小容量"""
        figsize = figsize or VIZ_CONFIG['figsize_profile']
        fig, ax = plt.subplots(figsize=figsize)

        days = np.arange(1, len(profile.demand) + 1)
        ax.fill_between(days, profile.demand / 1e3, step='mid', alpha=0.6, label='II.b online demand')
        ax.axhline(profile.average.khs06, color='gray', linestyle=':', label='yearly average')
        if tier0 is not None:
            ax.axhline(tier0.hs06.khs06, color='red', linestyle='--',
                       label=f'Tier0 minimum ({tier0.fraction:.0%} of total)')
        ax.set_xlim(1, len(days))
        ax.set_xlabel('Day of year')
        ax.set_ylabel('kHS06')
        ax.set_title(f'{title} online compute profile')
        ax.legend(loc='upper right')
        ax.grid(True, alpha=0.3)

        plt.tight_layout()
        self._save_figure_as_base64(fig, f'online_profile_{title}'.rstrip('_'))
        return self

    def create_compute_shares(self, aggregate, title='', figsize=None):
        """II.a / II.b 中各实验的份额"""
        figsize = figsize or VIZ_CONFIG['figsize_shares']
        fig, ax = plt.subplots(figsize=figsize)

        classes = ['II.a', 'II.b']
        matrix = aggregate.matrix[classes] / 1e3
        bottom = np.zeros(len(classes))
        for experiment, row in matrix.iterrows():
            ax.bar(classes, row.to_numpy(), bottom=bottom, label=experiment)
            bottom += row.to_numpy()
        ax.set_ylabel('kHS06')
        ax.set_title(f'{title} shared compute by experiment')
        ax.legend(loc='upper right', fontsize='small')

        plt.tight_layout()
        self._save_figure_as_base64(fig, f'compute_shares_{title}'.rstrip('_'))
        return self

    def _save_figure_as_base64(self, fig, key):
        """保存图形为base64编码"""
        buffer = BytesIO()
        fig.savefig(buffer, format='png', dpi=VIZ_CONFIG['dpi'], bbox_inches='tight')
        buffer.seek(0)
        image_png = buffer.getvalue()
        buffer.close()

        self.base64_images[key] = base64.b64encode(image_png).decode('utf-8')
        self.figures[key] = fig
        plt.close(fig)
        logger.debug("图形 %s: %d 字节", key, len(image_png))

    def save_png(self, key, path):
        """把已生成的图写到文件"""
        data = base64.b64decode(self.base64_images[key])
        with open(path, 'wb') as handle:
            handle.write(data)
        return path

    def get_base64_images(self):
        """获取所有base64编码的图像"""
        return self.base64_images
