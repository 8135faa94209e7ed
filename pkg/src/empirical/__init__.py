"""Municipal tax panel: ingestion, differencing and the linearity application"""
