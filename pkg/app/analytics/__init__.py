"""
-*- coding: utf-8 -*-
 @Author: li
 @ProjectName: majority-switching
 @Email: lijianqiao2906@live.com
 @FileName: __init__.py
 @DateTime: 2025/6/25 上午9:10
 @Docs: 解析值函数与验证残差
"""
