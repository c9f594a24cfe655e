import logging
import os
import pkg_resources


log = logging.getLogger(__name__)


try:
    __version__ = pkg_resources.get_distribution('conley-lab').version
except pkg_resources.DistributionNotFound:
    __version__ = 'unknown'

package_directory = os.path.dirname(os.path.abspath(__file__))
templates_config_files_directory = os.path.join(package_directory, 'config_files_templates')
test_config_files_directory = os.path.join(package_directory, 'tests', 'data_files')

# Continuous integration runs against the test fixtures
is_ci = 'CI' in os.environ or 'CIRCLECI' in os.environ

default_config_files_directory = os.environ.get('CONLEY_LAB_CONFIG_DIRECTORY')

if default_config_files_directory is None and is_ci:
    default_config_files_directory = test_config_files_directory

if default_config_files_directory is None:
    from xdg import BaseDirectory
    default_config_files_directory = BaseDirectory.save_config_path('conley-lab')

    log.debug('Using default_config_files_directory = {}'.format(
        default_config_files_directory
        ))
