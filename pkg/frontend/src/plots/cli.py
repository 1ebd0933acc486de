"""Command line: plots <kind> <in.csv> -o <out.png>."""

import click

from .render import KINDS, PlotJob, SchemaError, render


@click.command()
@click.argument("kind", type=click.Choice(sorted(KINDS)))
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output_png", required=True,
              type=click.Path(dir_okay=False))
def main(kind, input_csv, output_png):
    """Render a figure from a gks-control CSV output."""
    try:
        render(PlotJob(kind, input_csv, output_png))
    except SchemaError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{kind}: wrote {output_png}")


if __name__ == "__main__":
    main()
