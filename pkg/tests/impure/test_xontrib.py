'''
Test that the tnvp xontrib loads and unloads cleanly.
'''

import io


def test_tnvp_loads():
    from xontrib.tnvp.main import _load_xontrib_, _unload_xontrib_
    assert callable(_load_xontrib_)
    assert callable(_unload_xontrib_)


def test_main_submodule_not_shadowed():
    import xontrib.tnvp
    import xontrib.tnvp.main as tnvp_main
    from types import ModuleType
    assert isinstance(tnvp_main, ModuleType)
    assert tnvp_main._load_xontrib_ is xontrib.tnvp._load_xontrib_
    assert callable(tnvp_main.main)


def test_package_exports_exist():
    import xontrib.tnvp
    missing = [n for n in xontrib.tnvp.__all__ if not hasattr(xontrib.tnvp, n)]
    assert missing == []


def test_alias_registered(with_tnvp):
    aliases = with_tnvp.XSH.aliases
    assert 'tnvp' in aliases
    from xontrib.tnvp.decorators import _exports
    assert {'make_model', 'run_schedule', 'evaluate', 'synthesize_chain',
            'load_checkpoint', 'save_checkpoint'} <= set(_exports)


def test_alias_removed_on_unload(xonsh_session, f_events):
    import xontrib.tnvp.main as tnvp_main
    tnvp_main._load_xontrib_(xonsh_session)
    assert 'tnvp' in xonsh_session.aliases
    tnvp_main._unload_xontrib_(xonsh_session)
    assert 'tnvp' not in xonsh_session.aliases


def test_alias_runs(with_tnvp, tmp_path):
    alias = with_tnvp.XSH.aliases['tnvp']
    out = io.StringIO()
    path = tmp_path / 'pairs.csv'
    status = alias(['generate', 'gaussian-drift', '--n-per-stage', '3',
                    '--output', str(path)], None, out, io.StringIO())
    assert status == 0
    assert path.exists()


def test_load_events(xonsh_session, f_events):
    import xontrib.tnvp.main as tnvp_main
    seen = []
    f_events.on_tnvp_load(lambda XSH, **_: seen.append('load'))
    f_events.on_tnvp_unload(lambda XSH, **_: seen.append('unload'))
    tnvp_main._load_xontrib_(xonsh_session)
    tnvp_main._unload_xontrib_(xonsh_session)
    assert seen == ['load', 'unload']
