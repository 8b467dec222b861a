import platform
import requests


def load_config():
    url = 'https://superoptimizer.example.com/static/config.json'
    try:
        resp = requests.get(url, timeout=10)
        return resp.json()
    except Exception:
        return {}


def get_arch():
    arch = platform.machine().lower()
    if arch in ('x86_64', 'amd64'):
        return 'x64'
    if arch in ('aarch64', 'arm64'):
        return 'arm64'
    return arch


def get_os():
    name = platform.system()
    if name == 'Darwin':
        return 'mac'
    if name == 'Windows':
        return 'win'
    return name.lower()
