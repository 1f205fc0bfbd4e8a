from django.conf import settings
from django.http import HttpResponse
from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import mixins, viewsets
from rest_framework.decorators import action
from rest_framework.filters import OrderingFilter
from rest_framework.response import Response
from rest_framework.views import APIView

from tggengine.models import TransformationRun
from tggengine.serializers import (
    BackwardSerializer,
    CheckSerializer,
    ForwardSerializer,
    RoundtripSerializer,
    TransformationRunListSerializer,
    TransformationRunSerializer,
)
from tggengine.tasks import run_corpus_report
from tggengine.utils.corpus import corpus_report
from tggengine.utils.exceptions import CspFailure, MiniJavaSyntaxError, TransformationStuck, TggError
from utility.pagination import RunPagination


class TransformationRunViewSet(mixins.ListModelMixin, viewsets.GenericViewSet):
    """
    Handles:
    - GET /runs/                -> List runs (filter by scenario, status, verdict)
    - GET /runs/{id}/           -> Retrieve a run with its triple and trace
    - DELETE /runs/{id}/        -> Delete a run
    - POST /runs/forward/       -> mini-Java text to flowgraph triple
    - POST /runs/backward/      -> flowgraph (or triple) to mini-Java text
    - POST /runs/roundtrip/     -> text through forward and backward
    - POST /runs/check/         -> consistency verdict for a triple
    """
    queryset = TransformationRun.objects.all().order_by('-created_at', '-id')
    serializer_class = TransformationRunListSerializer
    pagination_class = RunPagination

    filter_backends = [DjangoFilterBackend, OrderingFilter]
    filterset_fields = ['scenario', 'status', 'verdict']
    ordering_fields = ['created_at', 'scenario']

    def retrieve(self, request, pk=None):
        try:
            run = TransformationRun.objects.get(pk=pk)
        except TransformationRun.DoesNotExist:
            return Response({"error": "Run not found"}, status=404)
        return Response(TransformationRunSerializer(run).data)

    def destroy(self, request, pk=None):
        try:
            run = TransformationRun.objects.get(pk=pk)
            run.delete()
            return Response({"message": "Run deleted successfully."}, status=204)
        except TransformationRun.DoesNotExist:
            return Response({"error": "Run not found"}, status=404)

    def _transform(self, serializer_class, request):
        serializer = serializer_class(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=400)
        try:
            result_data = serializer.save()
        except (TransformationStuck, CspFailure) as exc:
            details = getattr(exc, 'untranslated', [])
            return Response({"error": str(exc), "details": details}, status=422)
        except MiniJavaSyntaxError as exc:
            details = {"line": exc.line, "column": exc.column, "expected": list(exc.expected)}
            return Response({"error": str(exc), "details": details}, status=400)
        except TggError as exc:
            return Response({"error": str(exc), "details": []}, status=400)
        return Response(result_data, status=201)

    @action(detail=False, methods=['post'], url_path='forward')
    def forward(self, request):
        """
        POST /runs/forward/
        Input: { "source": "void m() { a = b + 3; }" }
        """
        return self._transform(ForwardSerializer, request)

    @action(detail=False, methods=['post'], url_path='backward')
    def backward(self, request):
        """
        POST /runs/backward/
        Input: { "model": <triple or flowgraph JSON> }
        """
        return self._transform(BackwardSerializer, request)

    @action(detail=False, methods=['post'], url_path='roundtrip')
    def roundtrip(self, request):
        return self._transform(RoundtripSerializer, request)

    @action(detail=False, methods=['post'], url_path='check')
    def check(self, request):
        return self._transform(CheckSerializer, request)


class CorpusReportView(APIView):
    """
    GET  -> CSV with one row per corpus program
    POST -> queue the same report as a background task
    """

    def get(self, request):
        df = corpus_report(settings.TGG_CORPUS_DIR)

        response = HttpResponse(content_type='text/csv')
        response['Content-Disposition'] = 'attachment; filename="corpus_report.csv"'

        df.to_csv(path_or_buf=response, index=False, encoding='utf-8')

        return response

    def post(self, request):
        task = run_corpus_report.delay(str(settings.TGG_CORPUS_DIR))

        return Response({
            "message": "Corpus report queued. Processing in background.",
            "task_id": task.id
        }, status=202)
