#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Linha de comando principal
Observador distribuído sob topologias direcionadas chaveadas
"""

import os
import sys
import logging
import traceback
from typing import List, Optional

import click
from dotenv import load_dotenv

SRC_DIR = os.path.dirname(os.path.abspath(__file__))
ROOT_DIR = os.path.dirname(SRC_DIR)
for path in (ROOT_DIR, SRC_DIR):
    if path not in sys.path:
        sys.path.insert(0, path)

# Carrega variáveis de ambiente antes de ler Config
load_dotenv(os.path.join(ROOT_DIR, '.env'))

from config import Config

# Configuração de logging
logging.basicConfig(
    level=Config.LOG_LEVEL,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Importa grupos de comandos
from commands.analysis import analysis_commands
from commands.simulation import simulation_commands
from services.errors import NumericalError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def create_cli() -> click.Group:
    """Cria o grupo de comandos e registra os subcomandos"""

    @click.group(name='dobs')
    @click.option('--verbose', is_flag=True, help='Logging em nível DEBUG')
    def cli(verbose: bool):
        """Observador distribuído: transformação de rede, decomposição, certificado e simulação"""
        if verbose:
            logging.getLogger().setLevel(logging.DEBUG)

    for command in analysis_commands + simulation_commands:
        cli.add_command(command)
    return cli


def main(argv: Optional[List[str]] = None) -> int:
    """Executa um subcomando e devolve o código de saída (0, 1 validação, 2 numérico)"""
    cli = create_cli()
    try:
        cli.main(args=argv, prog_name='dobs', standalone_mode=False)
        return EXIT_OK
    except ValidationError as e:
        logger.error(f"❌ Entrada inválida: {e}")
        click.echo(f"error: {e}", err=True)
        return EXIT_VALIDATION
    except NumericalError as e:
        logger.error(f"❌ Falha numérica: {e}", exc_info=True)
        click.echo(f"numerical error: {e}", err=True)
        return EXIT_NUMERICAL
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_VALIDATION
    except click.ClickException as e:
        e.show()
        return EXIT_VALIDATION
    except Exception as e:
        logger.error(f"❌ Erro não tratado: {str(e)}")
        logger.error(traceback.format_exc())
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())
