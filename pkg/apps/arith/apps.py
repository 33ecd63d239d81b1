from django.apps import AppConfig


class ArithConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.arith'
    verbose_name = 'Algebraic numbers and Mahler measure'
