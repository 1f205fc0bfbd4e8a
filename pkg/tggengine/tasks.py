import logging

from celery import shared_task

from tggengine.utils.corpus import corpus_report

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def run_corpus_report(self, corpus_dir=None):
    """
    Background task that runs every corpus program through forward, check and backward.
    """
    try:
        df = corpus_report(corpus_dir)
        failed = df[~df["round_trip_ok"] | (df["check_verdict"] != "accept")]
        logger.info("corpus report: %d programs, %d failing", len(df), len(failed))
        return {
            "status": "success",
            "programs": len(df),
            "round_trips_ok": int(df["round_trip_ok"].sum()),
            "failing": failed["name"].tolist(),
        }

    except Exception as e:
        self.update_state(state='FAILURE', meta={'error': str(e)})
        raise
