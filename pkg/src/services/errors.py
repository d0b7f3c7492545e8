#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Hierarquia de exceções
Erros de validação (entrada inválida) e erros numéricos (falha de cálculo)
"""

from typing import Any, Dict, Optional


class DobsError(Exception):
    """Erro base do toolkit"""


class ValidationError(DobsError, ValueError):
    """Entrada inválida: faixa, dimensão ou esquema"""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class NumericalError(DobsError, ArithmeticError):
    """Falha numérica durante um cálculo"""


class DecompositionError(NumericalError):
    """Par (C, A) não observável"""

    def __init__(self, message: str, rank: Optional[int] = None, dimension: Optional[int] = None):
        self.rank = rank
        self.dimension = dimension
        super().__init__(message)


class PlacementError(NumericalError):
    """Alocação de polos impossível ou imprecisa"""


class InfeasibilityError(NumericalError):
    """Um dos solvers do certificado não encontrou solução"""

    def __init__(self, message: str, report: Optional[Dict[str, Any]] = None):
        self.report = report or {}
        super().__init__(message)


class DivergenceError(NumericalError):
    """Derivada não finita durante a integração"""
