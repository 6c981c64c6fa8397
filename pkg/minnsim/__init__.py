import logging

import click

from config import LOG_LEVEL


def create_cli():
    @click.group(help="Desk-scale simulator for metasurfaces-integrated neural networks.")
    @click.option("--log-level", default=LOG_LEVEL, show_default=True, help="Logging level for library modules.")
    def cli(log_level):
        logging.basicConfig(
            level=log_level.upper(),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )

    from .harness import controller

    for command in controller.COMMANDS:
        cli.add_command(command)

    return cli
