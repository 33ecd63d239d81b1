from django.apps import AppConfig


class DyadicConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.dyadic'
    verbose_name = 'Dyadic partitions'
