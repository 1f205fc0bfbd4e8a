"""
URL configuration for tgg_backend project.

Everything lives under ``api/v1/``; the transformation endpoints are in
``tggengine.urls``.
"""

from django.contrib import admin
from django.urls import path, include

api_urlpatterns = [
    path(
        "tggengine/",
        include("tggengine.urls"),
        name="tggengine",
    ),
]

urlpatterns = [
    path("admin/", admin.site.urls),
    path(
        "api/v1/",
        include(api_urlpatterns),
        name="api-v1",
    ),
]
