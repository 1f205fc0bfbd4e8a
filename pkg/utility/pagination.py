from rest_framework.pagination import PageNumberPagination


class RunPagination(PageNumberPagination):
    """Transformation runs are listed newest first; triples are only sent on retrieve."""
    page_size = 20
    page_size_query_param = 'page_size'
    max_page_size = 200
