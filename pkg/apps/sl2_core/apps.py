from django.apps import AppConfig


class Sl2CoreConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.sl2_core'
    verbose_name = 'SL2 structure'
