from django.apps import AppConfig


class SlicingLabConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.slicing_lab'
    verbose_name = 'Multislicing experiments'
