# Django applications module