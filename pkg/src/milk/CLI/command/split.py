import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich import print as rprint
from rich.table import Table

from ...datamodel.split import DatasetBundle
from ..state import build_bundle, handle_errors, save_run_config, state, write_split

logger = logging.getLogger(__name__)


def split_table(bundle: DatasetBundle) -> Table:
    table = Table(title=f"新物品划分 (protocol={bundle.protocol}, seed={bundle.seed})")
    table.add_column("划分", style="cyan")
    table.add_column("物品数", justify="right")
    table.add_column("交互数", justify="right")
    table.add_column("缺失一个模态", justify="right")
    table.add_column("缺失两个及以上", justify="right")

    rows = [
        ("warm", bundle.warm_items, len(bundle.train), bundle.train_mask),
        ("val", bundle.val_items, len(bundle.val_pairs), bundle.test_mask),
        ("test", bundle.test_items, len(bundle.test_pairs), bundle.test_mask),
    ]
    for name, items, n_pairs, mask in rows:
        counts = mask.missing_counts()[items]
        table.add_row(name, str(len(items)), str(n_pairs), str(int((counts == 1).sum())), str(int((counts >= 2).sum())))
    return table


@handle_errors
def split(
    interactions: Annotated[Optional[str], typer.Option("--interactions", help="交互文件 (user<TAB>item)")] = None,
    features: Annotated[Optional[List[str]], typer.Option("--features", help="各模态特征文件，按模态顺序重复给出")] = None,
    mask: Annotated[Optional[str], typer.Option("--mask", help="数据自带的可用性矩阵 (CSV)")] = None,
    protocol: Annotated[Optional[str], typer.Option("--protocol", help="缺失协议: FTFT / FTMT / MTMT / custom")] = None,
    new_ratio: Annotated[Optional[float], typer.Option("--new-ratio", help="新物品比例")] = None,
    train_missing_ratio: Annotated[Optional[float], typer.Option("--train-missing-ratio", help="custom 协议下 warm 物品的缺失比例")] = None,
    test_missing_ratio: Annotated[Optional[float], typer.Option("--test-missing-ratio", help="custom 协议下新物品的缺失比例")] = None,
    max_missing_per_item: Annotated[Optional[int], typer.Option("--max-missing", help="custom 协议下每个物品最多缺失的模态数")] = None
):
    run = state.run_config(
        interactions=interactions,
        features=features or None,
        mask=mask,
        protocol=protocol,
        new_ratio=new_ratio,
        train_missing_ratio=train_missing_ratio,
        test_missing_ratio=test_missing_ratio,
        max_missing_per_item=max_missing_per_item,
    )
    bundle = build_bundle(run)
    write_split(bundle, run.out_dir)
    save_run_config(run)

    rprint(split_table(bundle))
    rprint(f"[green]划分完成！[/green]manifest: {(Path(run.out_dir) / 'manifest.json').resolve()}")
