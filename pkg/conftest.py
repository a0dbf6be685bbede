import django
from django.conf import settings

from test_settings import HELPER_SETTINGS


def pytest_configure():
    if not settings.configured:
        settings.configure(**HELPER_SETTINGS)
        django.setup()
