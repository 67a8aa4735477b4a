def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: 大批量随机实例上的保证检查，较慢，可用 -m 'not acceptance' 跳过")
