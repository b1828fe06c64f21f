from django.conf import settings
from django.urls import path

from apps.core.admin_site import registry_site

urlpatterns = [
    path("", registry_site.urls),
]

if settings.DEBUG:
    from django.conf.urls.static import static

    urlpatterns += static(settings.STATIC_URL, document_root=settings.STATIC_ROOT)
