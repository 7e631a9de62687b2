import sys

from src.catalog import build_catalog
from src.cli import main as cli_main
from src.config import config
from src.errors import FastDiffError


def check_catalog():
    """Runs every catalog entry through its residual oracle"""
    print("🧮 FASTDIFF-EXACT - CATALOG SELF-CHECK")
    print("=" * 50)
    failures = 0
    for entry in build_catalog():
        try:
            report = entry.residual()
        except FastDiffError as e:
            print(f"❌ {entry.id}: {e}")
            failures += 1
            continue
        ok = report.passed(config.RESIDUAL_THRESHOLD)
        failures += not ok
        print(f"{'✅' if ok else '❌'} {entry.id:<28} max_rel={report.max_rel:.2e} "
              f"({report.n_evaluated} evaluated, {report.n_skipped_singular} skipped)")
    print("=" * 50)
    print("🎉 All entries verified" if not failures else f"⚠️ {failures} entries failed")
    return 1 if failures else 0


if __name__ == "__main__":
    # no arguments: self-check; otherwise behave like the CLI
    if len(sys.argv) == 1:
        sys.exit(check_catalog())
    sys.exit(cli_main(sys.argv[1:]))
