import logging
from pathlib import Path
from typing import Annotated, Optional

import typer
try:  # typer>=0.26 vendors click as typer._click
    from typer._click.exceptions import UsageError
except ImportError:
    from click import UsageError
from typer.core import TyperGroup

from ..errors import ConfigError
from .command import ablate, evaluate, generate, gradcheck, split, sweep, train
from .state import state

logger = logging.getLogger(__name__)

USAGE_EXIT_CODE = ConfigError.exit_code


class MilkGroup(TyperGroup):
    """用法错误（未知选项、取值非法、未知子命令）与配置错误共用退出码 1。"""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except UsageError as e:
            e.exit_code = USAGE_EXIT_CODE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except UsageError as e:
            e.exit_code = USAGE_EXIT_CODE
            raise


# 初始化主app对象
app = typer.Typer(cls=MilkGroup, help="MILK CLI - 多模态新物品推荐的实验命令行工具", no_args_is_help=True)

# --- 全局回调，记录全局选项 ---
@app.callback()
def main_callback(
    ctx: typer.Context,
    config: Annotated[Optional[Path], typer.Option(
        "--config", "-c",
        help="JSON 配置文件路径，命令行选项会覆盖其中的同名键"
    )] = None,
    seed: Annotated[Optional[int], typer.Option(
        "--seed",
        help="随机种子，覆盖配置文件中的 seed"
    )] = None,
    out: Annotated[Optional[str], typer.Option(
        "--out", "-o",
        help="输出目录，覆盖配置文件中的 out_dir"
    )] = None
):
    state.reset()
    state.config_path = config
    state.overrides = {"seed": seed, "out_dir": out}
    logger.info(f"执行子命令 {ctx.invoked_subcommand}, config={config}, seed={seed}, out={out}")

# --- 注册命令 ---
# 生成合成数据
app.command("generate", help="生成合成的交互与多模态特征")(generate.generate)

# 新物品划分与缺失协议
app.command("split", help="划分新物品并按协议模拟模态缺失")(split.split)

# 训练
app.command("train", help="训练模型并保存最优参数")(train.train)

# 评估
app.command("evaluate", help="在新物品上评估 Recall@K 与 NDCG@K")(evaluate.evaluate)

# 梯度检验
app.command("gradcheck", help="用中心差分检验解析梯度")(gradcheck.gradcheck)

# 消融实验
app.command("ablate", help="在同一划分上比较各个模型变体")(ablate.ablate)

# 超参数扫描
app.command("sweep", help="逐个扫描 alpha / beta / lambda")(sweep.sweep)
