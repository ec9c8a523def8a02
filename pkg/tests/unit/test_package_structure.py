"""
Test package structure and basic imports.
"""

import pytest


def test_package_import():
    """Test that the package can be imported."""
    try:
        import spamcraft
        assert spamcraft.__version__ == "0.1.0"
        assert spamcraft.__author__ == "Spamcraft contributors"
    except ImportError as e:
        pytest.fail(f"Failed to import spamcraft: {e}")


def test_submodules_exist():
    """Test that all submodules exist."""
    import spamcraft

    for name in ('crypto', 'features', 'learning', 'reduction', 'protocol', 'transport', 'benchmarking'):
        assert hasattr(spamcraft, name)


def test_exported_names_resolve():
    import spamcraft

    assert hasattr(spamcraft, '__all__')
    missing = [name for name in spamcraft.__all__ if not hasattr(spamcraft, name)]
    assert missing == []


def test_registries_are_populated():
    from spamcraft.benchmarking import BENCHMARKER_REGISTRY
    from spamcraft.reduction import REDUCER_REGISTRY

    assert set(REDUCER_REGISTRY) == {'hashspace', 'uniform', 'dfprune', 'multinomial', 'lsh', 'pca'}
    assert set(BENCHMARKER_REGISTRY) == {'protocol', 'reduction'}
