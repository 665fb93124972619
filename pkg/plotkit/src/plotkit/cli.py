"""`plotkit <kind> --in FILES --out FILE [--style paper]`."""

from __future__ import annotations

import sys

import click

from . import KINDS
from .figures import render
from .io import ParseError


@click.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.option("--in", "in_paths", multiple=True, required=True,
              type=click.Path(exists=True), help="input file (repeatable)")
@click.option("--out", required=True, type=click.Path())
@click.option("--style", default=None, type=click.Choice(["paper"]))
@click.option("--fixed-p", is_flag=True,
              help="log-log axes vs DOF (fixed-order runs) instead of "
                   "semi-log vs sqrt(DOF)")
def main(kind, in_paths, out, style, fixed_p):
    try:
        path, slope = render(kind, in_paths, out, style=style,
                             fixed_p=fixed_p)
    except ParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    msg = f"wrote {path}"
    if slope is not None:
        msg += f" (slope {slope:.6g})"
    click.echo(msg)


if __name__ == "__main__":
    main()
