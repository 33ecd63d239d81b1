from django.apps import AppConfig


class WalkConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.walk'
    verbose_name = 'Random walks on the modular space'
