from django.conf import settings
from rest_framework import serializers

from tggengine.cli import export_dot
from tggengine.models import TransformationRun
from tggengine.utils.corpus import default_engine
from tggengine.utils.exceptions import CspFailure, TransformationStuck, TggError
from tggengine.utils.flowgraphs import METAMODELS
from tggengine.utils.graph import graph_from_dict, triple_from_dict, triple_to_dict
from tggengine.utils.minijava import normalize, parse_program, unparse_program


class TransformationRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = TransformationRun
        fields = '__all__'


class TransformationRunListSerializer(serializers.ModelSerializer):
    class Meta:
        model = TransformationRun
        fields = ['id', 'scenario', 'status', 'verdict', 'created_at']


class TransformationSerializer(serializers.Serializer):
    """Validates one request, runs the scenario and records it as a TransformationRun.

    Engine errors are recorded on the run and re-raised for the view to map.
    """
    scenario = None

    def transform(self, data):
        raise NotImplementedError

    def source_of(self, data):
        return data.get('source', '')

    def save(self, **kwargs):
        run = TransformationRun(scenario=self.scenario, source_text=self.source_of(self.validated_data))
        try:
            outcome = self.transform(self.validated_data)
        except (TransformationStuck, CspFailure) as exc:
            run.status = 'stuck'
            run.error = str(exc)
            run.save()
            raise
        except TggError as exc:
            run.status = 'invalid'
            run.error = str(exc)
            run.save()
            raise
        for field, value in outcome.items():
            setattr(run, field, value)
        run.save()
        self.instance = run
        return TransformationRunSerializer(run).data


def _check_size(text):
    if len(text.encode('utf-8')) > settings.TGG_MAX_SOURCE_BYTES:
        raise serializers.ValidationError(f"source exceeds {settings.TGG_MAX_SOURCE_BYTES} bytes")
    return text


class ForwardSerializer(TransformationSerializer):
    scenario = 'forward'
    source = serializers.CharField(trim_whitespace=False)

    def validate_source(self, value):
        return _check_size(value)

    def transform(self, data):
        result = default_engine().forward(parse_program(data['source']))
        return {
            'triple': triple_to_dict(result.triple),
            'trace': result.trace_lines(),
            'result_text': export_dot(result.triple),
        }


class RoundtripSerializer(ForwardSerializer):
    scenario = 'roundtrip'

    def transform(self, data):
        engine = default_engine()
        forward = engine.forward(parse_program(data['source']))
        backward = engine.backward(forward.triple.target)
        text = unparse_program(backward.triple.source)
        return {
            'triple': triple_to_dict(backward.triple),
            'trace': forward.trace_lines() + backward.trace_lines(),
            'result_text': text,
            'verdict': 'accept' if text == normalize(data['source']) else 'reject',
        }


class BackwardSerializer(TransformationSerializer):
    scenario = 'backward'
    model = serializers.JSONField(help_text="A triple or a bare flowgraph document")

    def validate_model(self, value):
        if not isinstance(value, dict):
            raise serializers.ValidationError("expected a JSON object")
        return value

    def source_of(self, data):
        return ''

    def transform(self, data):
        document = data['model']
        if 'target' in document and 'corrs' in document:
            document = document['target']
        try:
            flow = graph_from_dict(document, METAMODELS, prefix='t')
        except (KeyError, TypeError) as exc:
            raise serializers.ValidationError({'model': f"malformed flowgraph: {exc}"})
        result = default_engine().backward(flow)
        return {
            'triple': triple_to_dict(result.triple),
            'trace': result.trace_lines(),
            'result_text': unparse_program(result.triple.source),
        }


class CheckSerializer(TransformationSerializer):
    scenario = 'check'
    triple = serializers.JSONField()

    def source_of(self, data):
        return ''

    def transform(self, data):
        try:
            triple = triple_from_dict(data['triple'], METAMODELS)
        except (KeyError, TypeError) as exc:
            raise serializers.ValidationError({'triple': f"malformed triple: {exc}"})
        report = default_engine().check(triple)
        return {
            'triple': data['triple'],
            'trace': [record.trace_line() for record in report.trace],
            'verdict': report.verdict,
            'result_text': "\n".join(report.unmarked),
        }
