# Shared utilities for the WSN clustering workbench
