import configparser
import os


from conley_lab import templates_config_files_directory


class Config(configparser.ConfigParser):
    """Library defaults overlaid with the user's config.ini."""
    config_ini = None

    def __init__(self, config_files_directory = None):
        configparser.ConfigParser.__init__(self)
        self.read([os.path.join(templates_config_files_directory, 'config_template.ini')])
        if config_files_directory is not None:
            config_ini = os.path.join(config_files_directory, 'config.ini')
            if os.path.exists(config_ini):
                self.config_ini = config_ini
                self.read([config_ini])

    def homology_grid(self, dimension):
        assert 1 <= dimension <= 4, "local homology is limited to dimension 4, got {}".format(dimension)
        return self.getint('homology', 'grid_{}d'.format(dimension))

    def probe_points(self, n):
        """Probe lattice points per axis for a map of R^{2n}, None where no option covers n."""
        option = 'probe_points_{}d'.format(2 * n)
        return self.getint('genfun', option) if self.has_option('genfun', option) else None
