from agents.library_agent import LibraryAgent
from agents.recall_agent import RecallAgent
from agents.classification_agent import ClassificationAgent
from agents.hough_agent import HoughAgent
from agents.coordinator import Coordinator, ExperimentReport

__all__ = [
    'LibraryAgent',
    'RecallAgent',
    'ClassificationAgent',
    'HoughAgent',
    'Coordinator',
    'ExperimentReport'
]
