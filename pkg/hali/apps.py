from django.apps import AppConfig
from django.conf import settings


class HaliConfig(AppConfig):
    name = "hali"
    verbose_name = "Harmonic level interpolation"

    def ready(self):
        from .utils import parse_settings

        parse_settings(settings)
