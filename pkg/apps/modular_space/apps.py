from django.apps import AppConfig


class ModularSpaceConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.modular_space'
    verbose_name = 'Modular space SL2(R)/SL2(Z)'
