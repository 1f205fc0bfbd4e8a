from django.urls import path
from rest_framework.routers import DefaultRouter

from tggengine.views import CorpusReportView, TransformationRunViewSet

router = DefaultRouter()
router.register(r'runs', TransformationRunViewSet, basename='runs')

urlpatterns = router.urls + [
    path('corpus-report/', CorpusReportView.as_view(), name='corpus-report'),
]
